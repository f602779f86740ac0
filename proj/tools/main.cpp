// ddsmc command line: collect -> synthesize -> simulate -> sweep -> report.
// Exit codes: 0 ok, 2 bad config/input, 3 infeasible synthesis, 4 divergence.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ddsmc/csv.hpp"
#include "ddsmc/runconfig.hpp"

namespace fs = std::filesystem;
using namespace ddsmc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitDivergence = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    double delta = -1.0;
    bool force = false;
    // synthesis and reaching-law overrides
    double eps1 = -1.0, eps2 = -1.0, margin = -1.0, solver_tol = -1.0;
    double q = -1.0, sigma = -1.0;
    std::vector<double> N, rho;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required = true) {
    auto* copt = cmd->add_option("--config", a.config_path, "run configuration file");
    if (config_required) copt->required();
    cmd->add_option("--out", a.out_dir, "output run directory (overrides config)");
    cmd->add_option("--seed", a.seed, "master seed (overrides config)");
    cmd->add_option("--delta", a.delta, "disturbance bound (overrides config)");
    cmd->add_flag("--force", a.force, "allow overwriting files in the run directory");
    cmd->add_option("--eps1", a.eps1, "scalar multiplier in the coupling bound");
    cmd->add_option("--eps2", a.eps2, "scalar multiplier in the data robustification");
    cmd->add_option("--margin", a.margin, "strictness margin for the cone constraints");
    cmd->add_option("--solver-tol", a.solver_tol, "solver centering tolerance");
    cmd->add_option("--N", a.N, "sliding matrix row (comma separated)")->delimiter(',');
    cmd->add_option("--q", a.q, "reaching-law decay, in (0,1)");
    cmd->add_option("--sigma", a.sigma, "reaching-gain slope, > 0");
    cmd->add_option("--rho", a.rho, "reaching-law gains, each in (0,1)")->delimiter(',');
}

RunConfig load_run_config(const CommonArgs& a) {
    RunConfig cfg = a.config_path.empty() ? RunConfig::defaults_for("pendulum")
                                          : load_config(a.config_path);
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    if (a.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(a.seed);
        cfg.apply_seed();
    }
    if (a.delta >= 0) cfg.disturbance.delta = a.delta;
    if (a.eps1 > 0) cfg.synthesis.eps1 = a.eps1;
    if (a.eps2 > 0) cfg.synthesis.eps2 = a.eps2;
    if (a.margin > 0) cfg.synthesis.strictness_margin = a.margin;
    if (a.solver_tol > 0) cfg.synthesis.solver_tol = a.solver_tol;
    if (a.q > 0) cfg.smc.q = a.q;
    if (a.sigma > 0) cfg.smc.sigma = a.sigma;
    if (!a.rho.empty())
        cfg.smc.rho = Eigen::Map<const Vector>(a.rho.data(), static_cast<Eigen::Index>(a.rho.size()));
    if (!a.N.empty()) {
        cfg.smc.N = Eigen::Map<const Vector>(a.N.data(), static_cast<Eigen::Index>(a.N.size()))
                        .transpose();
        cfg.synthesis.N = cfg.smc.N;
    }
    if (const char* env = std::getenv("DDSMC_SDP_SOLVER"); env && *env && cfg.synthesis.solver_name.empty())
        cfg.synthesis.solver_name = env;
    if (!cfg.synthesis.solver_name.empty()) make_solver(cfg.synthesis.solver_name);  // validate
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name, bool force) {
    fs::create_directories(cfg.out_dir);
    const fs::path p = fs::path(cfg.out_dir) / name;
    if (fs::exists(p) && !force)
        throw ConfigError(p.string() + " already exists (use --force to overwrite)");
    return p.string();
}

void snapshot_config(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const fs::path p = fs::path(cfg.out_dir) / "config.cfg";
    if (fs::exists(p)) return;  // append-only layout: first writer wins
    std::ofstream os(p);
    os << config_to_string(cfg);
}

SmcParams smc_params(const RunConfig& cfg) {
    SmcParams p = cfg.smc;
    p.N = cfg.synthesis.N;
    return p;
}

int cmd_collect(const CommonArgs& a, const std::string& dataset_path) {
    const RunConfig cfg = load_run_config(a);
    const PlantModel plant = cfg.plant();
    const DataSet ds = collect(plant, cfg.disturbance, cfg.excitation);
    const auto rich = richness_check(ds);
    snapshot_config(cfg);
    if (dataset_path.empty()) {
        save_dataset(ds, out_path(cfg, "dataset.csv", a.force));
    } else {
        save_dataset(ds, dataset_path);
    }
    std::cout << "collected T=" << ds.T << " samples, delta=" << ds.delta
              << ", Z0 rank " << rich.rank << "/" << ds.n_z()
              << (rich.rich ? " (rich)" : " (NOT rich)") << "\n";
    return 0;
}

int cmd_synthesize(const CommonArgs& a, const std::string& dataset_path, bool feasibility_only) {
    RunConfig cfg = load_run_config(a);
    if (feasibility_only) cfg.synthesis.optimize_gamma = false;
    const std::string dsp =
        dataset_path.empty() ? (fs::path(cfg.out_dir) / "dataset.csv").string() : dataset_path;
    if (!fs::exists(dsp)) throw ConfigError("dataset not found: " + dsp);
    const DataSet ds = load_dataset(dsp);
    const PlantModel plant = cfg.plant();
    const SynthesisResult res = solve(ds, plant.B, plant.D, cfg.synthesis);
    snapshot_config(cfg);
    save_result(res, cfg.synthesis, out_path(cfg, "synthesis.csv", a.force));
    if (!res.feasible()) {
        std::cerr << "synthesis " << to_string(res.status) << ": " << res.message << "\n";
        return kExitInfeasible;
    }
    std::cout << "synthesis feasible, gamma=" << res.gamma
              << " (minimum " << res.gamma_opt << "), residuals:";
    for (const auto& [k, v] : res.residuals)
        if (k == "factorization_residual" || k == "cancellation_residual" ||
            k == "lmi_min_eig" || k == "P_min_eig")
            std::cout << " " << k << "=" << v;
    std::cout << "\n";
    return 0;
}

int cmd_simulate(const CommonArgs& a, const std::string& result_path, bool open_loop,
                 bool nominal_only, int steps_override) {
    const RunConfig cfg = load_run_config(a);
    const PlantModel plant = cfg.plant();
    SimSpec spec;
    spec.model = plant;
    spec.dist = cfg.disturbance;
    spec.x0 = cfg.sim_x0;
    spec.steps = steps_override > 0 ? steps_override : cfg.sim_steps;
    spec.blowup_bound = cfg.blowup_bound;
    spec.mode = open_loop ? ControlMode::OpenLoop
                          : (nominal_only ? ControlMode::NominalOnly : ControlMode::FullSmc);

    SynthesisResult res;
    DataSet ds;
    bool have_oracle = false;
    if (!open_loop) {
        const std::string rp = result_path.empty()
                                   ? (fs::path(cfg.out_dir) / "synthesis.csv").string()
                                   : result_path;
        if (!fs::exists(rp)) throw ConfigError("synthesis result not found: " + rp);
        res = load_result(rp);
        if (!res.feasible()) {
            std::cerr << "stored synthesis result is " << to_string(res.status) << "\n";
            return kExitInfeasible;
        }
        spec.controller = ControllerState::from_result(res, smc_params(cfg), plant.B);
        spec.P = res.P;
        const std::string dsp = (fs::path(cfg.out_dir) / "dataset.csv").string();
        if (fs::exists(dsp)) {
            ds = load_dataset(dsp);
            have_oracle = ds.W0_oracle.has_value();
        }
    }

    SimTrace tr;
    try {
        tr = run(spec);
    } catch (const DivergenceError& e) {
        std::cerr << "simulation diverged: " << e.what() << "\n";
        return kExitDivergence;
    }
    std::vector<std::string> comments = {"ddsmc trace",
                                         "x0 = " + [&] {
                                             std::string s;
                                             for (Eigen::Index i = 0; i < spec.x0.size(); ++i)
                                                 s += (i ? "," : "") + csv::format_double(spec.x0[i]);
                                             return s;
                                         }(),
                                         "mode = " + std::string(open_loop ? "open_loop"
                                                                 : nominal_only ? "nominal"
                                                                                : "smc")};
    if (!open_loop && have_oracle) {
        const ReachingReport rr = check_reaching(tr, plant, *spec.controller, ds, res);
        const LyapunovReport lr = check_lyapunov(tr, plant, *spec.controller, ds, res);
        std::cout << "reaching: " << rr.violations_9a << "+" << rr.violations_9b
                  << " violations over " << rr.checked_outside << " checked steps, first entry "
                  << rr.first_entry << ", residence " << rr.residence << "\n";
        std::cout << "lyapunov decrease holds at " << lr.fraction * 100.0 << "% of steps\n";
        const Matrix G =
            (Matrix(res.G1.rows(), res.G1.cols() + res.G2.cols()) << res.G1, res.G2).finished();
        const Vector fb = apriori_reaching_bound(
            plant, spec.controller->params, G, cfg.disturbance.delta, ds.T,
            Vector::Constant(plant.n_x(), -M_PI), Vector::Constant(plant.n_x(), M_PI));
        std::cout << "observed band bound " << rr.f_bar_obs.transpose()
                  << ", a-priori surrogate over [-pi, pi]^n " << fb.transpose() << "\n";
    }
    snapshot_config(cfg);
    save_trace(tr, out_path(cfg, "trace.csv", a.force), comments);
    const bool conv = trace_converged(tr, cfg.convergence_threshold, cfg.convergence_fraction);
    std::cout << "simulated " << tr.steps() << " steps, final |x|_inf = "
              << tr.x.rightCols(1).cwiseAbs().maxCoeff() << ", converged=" << (conv ? "yes" : "no")
              << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& a, int jobs) {
    const RunConfig cfg = load_run_config(a);
    const PlantModel plant = cfg.plant();
    SweepOptions so;
    so.sim_x0 = cfg.sim_x0;
    so.sim_steps = cfg.sim_steps;
    so.convergence_threshold = cfg.convergence_threshold;
    so.convergence_fraction = cfg.convergence_fraction;
    so.jobs = jobs;
    std::vector<std::uint64_t> seeds;
    for (int j = 0; j < cfg.sweep_seeds; ++j) seeds.push_back(cfg.seed + j);
    const auto cells =
        sweep_delta(plant, cfg.excitation, cfg.synthesis, smc_params(cfg), cfg.sweep_deltas,
                    seeds, so);
    snapshot_config(cfg);
    save_sweep(cells, out_path(cfg, "sweep.csv", a.force));
    for (double d : cfg.sweep_deltas) {
        int feas = 0, conv = 0, n = 0;
        for (const auto& c : cells)
            if (c.delta == d) {
                ++n;
                feas += c.status == SdpStatus::Feasible;
                conv += c.converged;
            }
        std::cout << "delta=" << d << ": feasible " << feas << "/" << n << ", converged " << conv
                  << "/" << n << "\n";
    }
    return 0;
}

struct TraceTable {
    std::vector<std::string> cols;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const {
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return static_cast<int>(i);
        throw ConfigError("trace is missing column " + name);
    }
};

TraceTable parse_trace(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open trace: " + path);
    TraceTable t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(cur);
                cur.clear();
            } else cur += ch;
        }
        fields.push_back(cur);
        if (t.cols.empty()) t.cols = fields;
        else t.rows.push_back(fields);
    }
    return t;
}

int cmd_report(const std::string& run_dir, bool force) {
    const fs::path dir(run_dir);
    if (!fs::exists(dir / "config.cfg")) throw ConfigError("no config snapshot in " + run_dir);
    const RunConfig cfg = load_config((dir / "config.cfg").string());
    const PlantModel plant = cfg.plant();
    std::ostringstream rep;

    if (fs::exists(dir / "synthesis.csv")) {
        const SynthesisResult res = load_result((dir / "synthesis.csv").string());
        rep << "synthesis: " << to_string(res.status);
        if (res.feasible()) {
            rep << ", gamma=" << csv::format_double(res.gamma)
                << ", gamma_opt=" << csv::format_double(res.gamma_opt) << "\n";
            for (const auto& [k, v] : res.residuals)
                rep << "  " << k << " = " << csv::format_double(v) << "\n";
        } else {
            rep << " (" << res.message << ")\n";
        }
    }

    if (fs::exists(dir / "trace.csv")) {
        const TraceTable t = parse_trace((dir / "trace.csv").string());
        const int nx = plant.n_x();
        // per-curve plot data: time vs value
        auto dump_curve = [&](const std::string& col, const std::string& fname) {
            if (std::find(t.cols.begin(), t.cols.end(), col) == t.cols.end()) return;
            const int ci = t.col(col);
            const fs::path p = dir / fname;
            if (fs::exists(p) && !force)
                throw ConfigError(p.string() + " already exists (use --force)");
            std::ofstream os(p);
            os << "time," << col << "\n";
            for (const auto& r : t.rows) {
                if (r[static_cast<size_t>(ci)].empty()) continue;
                const double k = std::stod(r[0]);
                os << csv::format_double(k * plant.t_s) << "," << r[static_cast<size_t>(ci)]
                   << "\n";
            }
        };
        for (int i = 1; i <= nx; ++i)
            dump_curve("x_" + std::to_string(i), "fig_x" + std::to_string(i) + ".csv");
        dump_curve("s_1", "fig_s.csv");
        dump_curve("u_1", "fig_u.csv");
        dump_curve("V", "fig_V.csv");

        double tail_max = 0.0;
        const size_t start = t.rows.size() - std::max<size_t>(1, t.rows.size() / 5);
        for (size_t r = start; r < t.rows.size(); ++r)
            for (int i = 1; i <= nx; ++i)
                tail_max = std::max(tail_max, std::abs(std::stod(t.rows[r][t.col("x_" + std::to_string(i))])));
        rep << "trace: " << t.rows.size() - 1 << " steps, tail |x|_inf = "
            << csv::format_double(tail_max) << ", converged="
            << (tail_max <= cfg.convergence_threshold ? "yes" : "no") << "\n";
        int in_om = 0, n_om = 0;
        const int cio = t.col("in_omega");
        for (const auto& r : t.rows)
            if (!r[static_cast<size_t>(cio)].empty()) {
                ++n_om;
                in_om += r[static_cast<size_t>(cio)] == "1";
            }
        if (n_om) rep << "in_omega fraction: " << static_cast<double>(in_om) / n_om << "\n";
    }

    if (fs::exists(dir / "sweep.csv")) {
        rep << "sweep table: see sweep.csv\n";
    }

    const fs::path rp = dir / "report.txt";
    if (fs::exists(rp) && !force) throw ConfigError(rp.string() + " already exists (use --force)");
    std::ofstream os(rp);
    os << rep.str();
    std::cout << rep.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven sliding mode control toolkit"};
    app.require_subcommand(1);

    CommonArgs ca, cs, cm, cw;
    std::string dataset_out, dataset_path, result_path, report_dir;
    bool feasibility_only = false, open_loop = false, nominal_only = false, report_force = false;
    int steps_override = -1, jobs = 1;

    auto* collect_cmd = app.add_subcommand("collect", "run the excitation experiment");
    add_common(collect_cmd, ca);
    collect_cmd->add_option("--dataset", dataset_out, "dataset save path (default <out>/dataset.csv)");

    auto* synth_cmd = app.add_subcommand("synthesize", "solve the controller program");
    add_common(synth_cmd, cs);
    synth_cmd->add_option("--dataset", dataset_path, "dataset file (default <out>/dataset.csv)");
    synth_cmd->add_flag("--feasibility-only", feasibility_only,
                        "skip the objective, return a centered feasible point");

    auto* sim_cmd = app.add_subcommand("simulate", "run the closed loop");
    add_common(sim_cmd, cm);
    sim_cmd->add_option("--result", result_path, "synthesis file (default <out>/synthesis.csv)");
    sim_cmd->add_flag("--open-loop", open_loop, "simulate with u = 0");
    sim_cmd->add_flag("--nominal-only", nominal_only, "use only the nominal term");
    sim_cmd->add_option("--steps", steps_override, "horizon override");

    auto* sweep_cmd = app.add_subcommand("sweep", "delta/seed feasibility sweep");
    add_common(sweep_cmd, cw);
    sweep_cmd->add_option("--jobs", jobs, "parallel sweep workers");

    auto* report_cmd = app.add_subcommand("report", "summarize a run directory");
    report_cmd->add_option("run_dir", report_dir, "run directory")->required();
    report_cmd->add_flag("--force", report_force, "overwrite existing report files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (collect_cmd->parsed()) return cmd_collect(ca, dataset_out);
        if (synth_cmd->parsed()) return cmd_synthesize(cs, dataset_path, feasibility_only);
        if (sim_cmd->parsed())
            return cmd_simulate(cm, result_path, open_loop, nominal_only, steps_override);
        if (sweep_cmd->parsed()) return cmd_sweep(cw, jobs);
        if (report_cmd->parsed()) return cmd_report(report_dir, report_force);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CollectionError& e) {
        std::cerr << "collection error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
