#include "ddsmc/plant.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ddsmc {

namespace {

std::map<std::string, NonlinearBasis> make_registry() {
    std::map<std::string, NonlinearBasis> reg;
    reg["pendulum_sin"] = NonlinearBasis{
        "pendulum_sin", {[](const Vector& x) { return std::sin(x[0]); }}};
    reg["cart_spring_exp"] = NonlinearBasis{
        "cart_spring_exp", {[](const Vector& x) { return std::exp(-x[0]) * x[0]; }}};
    reg["none"] = NonlinearBasis{"none", {}};
    return reg;
}

const std::map<std::string, NonlinearBasis>& registry() {
    static const auto reg = make_registry();
    return reg;
}

}  // namespace

const NonlinearBasis& basis_by_name(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end())
        throw std::invalid_argument("unknown basis name: " + name);
    return it->second;
}

void PlantModel::validate() const {
    const auto nx = A_x.rows();
    if (A_x.cols() != nx) throw std::invalid_argument("A_x must be square");
    if (A_q.rows() != nx && n_q() > 0) throw std::invalid_argument("A_q row count mismatch");
    if (A_q.cols() != n_q()) throw std::invalid_argument("A_q columns must equal basis size");
    if (B.rows() != nx) throw std::invalid_argument("B row count mismatch");
    if (D.rows() != nx) throw std::invalid_argument("D row count mismatch");
}

Vector eval_basis(const PlantModel& model, const Vector& x) {
    if (x.size() != model.n_x())
        throw std::invalid_argument("eval_basis: state dimension mismatch");
    Vector z(model.n_z());
    z.head(model.n_x()) = x;
    z.tail(model.n_q()) = model.basis.eval(x);
    return z;
}

Vector step(const PlantModel& model, const Vector& x, const Vector& u, const Vector& w) {
    if (x.size() != model.n_x() || u.size() != model.n_u() || w.size() != model.n_w())
        throw std::invalid_argument("step: dimension mismatch");
    if (!x.allFinite() || !u.allFinite() || !w.allFinite())
        throw std::runtime_error("step: non-finite input");
    return model.A_x * x + model.A_q * model.basis.eval(x) + model.B * u + model.D * w;
}

PlantModel make_pendulum() {
    const double ts = 0.1, m0 = 1.0, ell = 1.0, g = 9.8, mu = 0.01;
    PlantModel m;
    m.A_x.resize(2, 2);
    m.A_x << 1.0, ts, 0.0, 1.0 - ts * mu / (m0 * ell * ell);
    m.A_q.resize(2, 1);
    m.A_q << 0.0, ts * g / ell;
    m.B.resize(2, 1);
    m.B << 0.0, ts / (m0 * ell * ell);
    m.D.resize(2, 1);
    m.D << 0.0, ts;
    m.basis = basis_by_name("pendulum_sin");
    m.t_s = ts;
    return m;
}

PlantModel make_cart_spring() {
    const double ts = 0.02, m0 = 1.0, ke = 0.33, df = 1.0;
    PlantModel m;
    m.A_x.resize(2, 2);
    m.A_x << 1.0, ts, 0.0, 1.0 - ts * df / m0;
    m.A_q.resize(2, 1);
    m.A_q << 0.0, -ts * ke / m0;
    m.B.resize(2, 1);
    m.B << 0.0, ts / m0;
    m.D.resize(2, 1);
    m.D << 0.0, ts;
    m.basis = basis_by_name("cart_spring_exp");
    m.t_s = ts;
    return m;
}

namespace {

void write_matrix(std::ostream& os, const std::string& name, const Matrix& M) {
    os << name << " " << M.rows() << " " << M.cols() << "\n";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", M(r, c));
            os << buf << (c + 1 < M.cols() ? " " : "");
        }
        os << "\n";
    }
}

Matrix read_matrix(std::istream& is, const std::string& expect) {
    std::string name;
    long rows = 0, cols = 0;
    if (!(is >> name >> rows >> cols) || name != expect)
        throw std::runtime_error("plant config: expected matrix '" + expect + "'");
    Matrix M(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c)
            if (!(is >> M(r, c)))
                throw std::runtime_error("plant config: short read in matrix " + name);
    return M;
}

}  // namespace

std::string plant_to_config(const PlantModel& model) {
    std::ostringstream os;
    os << "plant v1\n";
    os << "basis " << model.basis.name << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", model.t_s);
    os << "t_s " << buf << "\n";
    write_matrix(os, "A_x", model.A_x);
    write_matrix(os, "A_q", model.A_q);
    write_matrix(os, "B", model.B);
    write_matrix(os, "D", model.D);
    return os.str();
}

PlantModel plant_from_config(const std::string& text) {
    std::istringstream is(text);
    std::string tag, version;
    if (!(is >> tag >> version) || tag != "plant")
        throw std::runtime_error("plant config: bad header");
    std::string key, basis_name;
    if (!(is >> key >> basis_name) || key != "basis")
        throw std::runtime_error("plant config: expected basis line");
    PlantModel m;
    m.basis = basis_by_name(basis_name);
    double ts = 0.0;
    if (!(is >> key >> ts) || key != "t_s")
        throw std::runtime_error("plant config: expected t_s line");
    m.t_s = ts;
    m.A_x = read_matrix(is, "A_x");
    m.A_q = read_matrix(is, "A_q");
    m.B = read_matrix(is, "B");
    m.D = read_matrix(is, "D");
    m.validate();
    return m;
}

void save_plant(const PlantModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << plant_to_config(model);
}

PlantModel load_plant(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return plant_from_config(ss.str());
}

}  // namespace ddsmc
