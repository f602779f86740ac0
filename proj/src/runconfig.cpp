#include "ddsmc/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ddsmc/csv.hpp"

namespace ddsmc {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

Vector parse_vector(const std::string& v, const std::string& key) {
    std::vector<double> vals;
    std::istringstream is(v);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            size_t pos = 0;
            vals.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad number in " + key + ": '" + tok + "'");
        }
    }
    if (vals.empty()) throw ConfigError(key + ": empty vector");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

double parse_num(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::string vec_to_string(const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + csv::format_double(v[i]);
    return s;
}

}  // namespace

PlantModel RunConfig::plant() const {
    if (!plant_file.empty()) return load_plant(plant_file);
    if (plant_name == "pendulum") return make_pendulum();
    if (plant_name == "cart_spring") return make_cart_spring();
    throw ConfigError("unknown plant: " + plant_name);
}

void RunConfig::apply_seed() {
    excitation.seed = seed;
    disturbance.seed = seed;
}

RunConfig RunConfig::defaults_for(const std::string& name) {
    RunConfig c;
    c.plant_name = name;
    c.smc.N.resize(1, 2);
    c.smc.N << 1.0, 1.0;
    c.smc.q = 0.1;
    c.smc.sigma = 0.1;
    c.smc.rho = Vector::Constant(1, 0.5);
    c.synthesis.N = c.smc.N;
    c.sim_x0 = (Vector(2) << 1.0, 0.0).finished();
    if (name == "cart_spring") {
        c.excitation.T = 150;
        c.excitation.input_lo = Vector::Constant(1, -1.0);
        c.excitation.input_hi = Vector::Constant(1, 1.0);
        // start collection where the exponential spring is actually excited;
        // near the origin e^{-x1} x1 is almost collinear with x1 and Z0
        // becomes numerically rank deficient
        c.excitation.x0 = (Vector(2) << 1.0, 0.0).finished();
        c.disturbance.delta = 0.1;
        c.sim_steps = 1500;
        c.sweep_deltas = {0.01, 0.05, 0.1, 0.2};
    } else {
        c.excitation.T = 30;
        c.excitation.input_lo = Vector::Constant(1, -0.5);
        c.excitation.input_hi = Vector::Constant(1, 0.5);
        c.disturbance.delta = 0.01;
        c.sim_steps = 300;
        c.sweep_deltas = {0.01, 0.1, 0.2, 0.3, 0.4};
    }
    c.apply_seed();
    return c;
}

RunConfig parse_config(const std::string& text) {
    // first pass: find the plant so defaults match it
    std::string plant = "pendulum";
    {
        std::istringstream is(text);
        std::string line, section;
        while (std::getline(is, line)) {
            line = trim(line.substr(0, line.find('#')));
            if (line.empty()) continue;
            if (line.front() == '[') {
                section = trim(line.substr(1, line.find(']') - 1));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            if (section == "plant" && trim(line.substr(0, eq)) == "name")
                plant = trim(line.substr(eq + 1));
        }
    }
    RunConfig c = RunConfig::defaults_for(plant);
    bool seed_given = false;

    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, close - 1));
            static const std::vector<std::string> known = {
                "plant", "excitation", "disturbance", "synthesis", "smc", "simulation",
                "sweep", "output"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;

        if (qual == "plant.name") c.plant_name = val;
        else if (qual == "plant.file") { c.plant_file = val; c.plant_name.clear(); }
        else if (qual == "excitation.T") c.excitation.T = static_cast<int>(parse_num(val, qual));
        else if (qual == "excitation.input_lo") c.excitation.input_lo = parse_vector(val, qual);
        else if (qual == "excitation.input_hi") c.excitation.input_hi = parse_vector(val, qual);
        else if (qual == "excitation.x0") c.excitation.x0 = parse_vector(val, qual);
        else if (qual == "excitation.seed") c.excitation.seed = static_cast<std::uint64_t>(parse_num(val, qual));
        else if (qual == "excitation.restart") c.excitation.restart = parse_bool(val, qual);
        else if (qual == "disturbance.delta") c.disturbance.delta = parse_num(val, qual);
        else if (qual == "disturbance.seed") c.disturbance.seed = static_cast<std::uint64_t>(parse_num(val, qual));
        else if (qual == "synthesis.eps1") c.synthesis.eps1 = parse_num(val, qual);
        else if (qual == "synthesis.eps2") c.synthesis.eps2 = parse_num(val, qual);
        else if (qual == "synthesis.margin") c.synthesis.strictness_margin = parse_num(val, qual);
        else if (qual == "synthesis.solver_tol") c.synthesis.solver_tol = parse_num(val, qual);
        else if (qual == "synthesis.gamma_slack") c.synthesis.gamma_slack = parse_num(val, qual);
        else if (qual == "synthesis.optimize_gamma") c.synthesis.optimize_gamma = parse_bool(val, qual);
        else if (qual == "synthesis.solver") c.synthesis.solver_name = val;
        else if (qual == "smc.N") {
            const Vector n = parse_vector(val, qual);
            c.smc.N = n.transpose();
            c.synthesis.N = c.smc.N;
        }
        else if (qual == "smc.q") c.smc.q = parse_num(val, qual);
        else if (qual == "smc.sigma") c.smc.sigma = parse_num(val, qual);
        else if (qual == "smc.rho") c.smc.rho = parse_vector(val, qual);
        else if (qual == "smc.cancel_on_basis") c.smc.cancel_on_basis = parse_bool(val, qual);
        else if (qual == "simulation.x0") c.sim_x0 = parse_vector(val, qual);
        else if (qual == "simulation.steps") c.sim_steps = static_cast<int>(parse_num(val, qual));
        else if (qual == "simulation.convergence_threshold") c.convergence_threshold = parse_num(val, qual);
        else if (qual == "simulation.convergence_fraction") c.convergence_fraction = parse_num(val, qual);
        else if (qual == "simulation.blowup_bound") c.blowup_bound = parse_num(val, qual);
        else if (qual == "sweep.deltas") {
            const Vector d = parse_vector(val, qual);
            c.sweep_deltas.assign(d.data(), d.data() + d.size());
        }
        else if (qual == "sweep.seeds") c.sweep_seeds = static_cast<int>(parse_num(val, qual));
        else if (qual == "output.dir") c.out_dir = val;
        else if (qual == "output.seed") { c.seed = static_cast<std::uint64_t>(parse_num(val, qual)); seed_given = true; }
        else throw ConfigError("unknown key '" + qual + "'");
    }
    if (seed_given) c.apply_seed();
    // explicit per-spec seeds win over the master seed
    std::istringstream is2(text);
    std::string sec2;
    while (std::getline(is2, line)) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') { sec2 = trim(line.substr(1, line.find(']') - 1)); continue; }
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (sec2 == "excitation" && key == "seed")
            c.excitation.seed = static_cast<std::uint64_t>(parse_num(val, "excitation.seed"));
        if (sec2 == "disturbance" && key == "seed")
            c.disturbance.seed = static_cast<std::uint64_t>(parse_num(val, "disturbance.seed"));
    }
    c.excitation.blowup_bound = c.blowup_bound;
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream isf(path);
    if (!isf) throw ConfigError("cannot open config: " + path);
    std::ostringstream ss;
    ss << isf.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_string(const RunConfig& c) {
    std::ostringstream os;
    os << "[plant]\n";
    if (!c.plant_file.empty()) os << "file = " << c.plant_file << "\n";
    else os << "name = " << c.plant_name << "\n";
    os << "\n[excitation]\n";
    os << "T = " << c.excitation.T << "\n";
    os << "input_lo = " << vec_to_string(c.excitation.input_lo) << "\n";
    os << "input_hi = " << vec_to_string(c.excitation.input_hi) << "\n";
    if (c.excitation.x0) os << "x0 = " << vec_to_string(*c.excitation.x0) << "\n";
    os << "seed = " << c.excitation.seed << "\n";
    os << "restart = " << (c.excitation.restart ? "true" : "false") << "\n";
    os << "\n[disturbance]\n";
    os << "delta = " << csv::format_double(c.disturbance.delta) << "\n";
    os << "seed = " << c.disturbance.seed << "\n";
    os << "\n[synthesis]\n";
    os << "eps1 = " << csv::format_double(c.synthesis.eps1) << "\n";
    os << "eps2 = " << csv::format_double(c.synthesis.eps2) << "\n";
    os << "margin = " << csv::format_double(c.synthesis.strictness_margin) << "\n";
    os << "solver_tol = " << csv::format_double(c.synthesis.solver_tol) << "\n";
    os << "gamma_slack = " << csv::format_double(c.synthesis.gamma_slack) << "\n";
    os << "optimize_gamma = " << (c.synthesis.optimize_gamma ? "true" : "false") << "\n";
    os << "\n[smc]\n";
    os << "N = " << vec_to_string(c.smc.N.row(0)) << "\n";
    os << "q = " << csv::format_double(c.smc.q) << "\n";
    os << "sigma = " << csv::format_double(c.smc.sigma) << "\n";
    os << "rho = " << vec_to_string(c.smc.rho) << "\n";
    os << "\n[simulation]\n";
    os << "x0 = " << vec_to_string(c.sim_x0) << "\n";
    os << "steps = " << c.sim_steps << "\n";
    os << "convergence_threshold = " << csv::format_double(c.convergence_threshold) << "\n";
    os << "convergence_fraction = " << csv::format_double(c.convergence_fraction) << "\n";
    os << "blowup_bound = " << csv::format_double(c.blowup_bound) << "\n";
    os << "\n[sweep]\n";
    os << "deltas = ";
    for (size_t i = 0; i < c.sweep_deltas.size(); ++i)
        os << (i ? ", " : "") << csv::format_double(c.sweep_deltas[i]);
    os << "\nseeds = " << c.sweep_seeds << "\n";
    os << "\n[output]\n";
    os << "dir = " << c.out_dir << "\n";
    os << "seed = " << c.seed << "\n";
    return os.str();
}

}  // namespace ddsmc
