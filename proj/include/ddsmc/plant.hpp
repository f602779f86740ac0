#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddsmc/rng.hpp"

namespace ddsmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered list of scalar nonlinear functions of the state. The lifted
/// vector is Z(x) = [x; Q(x)], so entries must not duplicate linear terms.
struct NonlinearBasis {
    std::string name;  // registered name, used for (de)serialization
    std::vector<std::function<double(const Vector&)>> entries;

    int n_q() const { return static_cast<int>(entries.size()); }

    Vector eval(const Vector& x) const {
        Vector q(n_q());
        for (int i = 0; i < n_q(); ++i) q[i] = entries[i](x);
        return q;
    }
};

/// Registry of named bases so plant files can refer to them by name.
const NonlinearBasis& basis_by_name(const std::string& name);

/// Discrete-time plant  x(k+1) = A_x x + A_q Q(x) + B u + D w.
/// A_x and A_q are ground truth for simulation and oracle checks only;
/// the synthesis path never reads them.
struct PlantModel {
    Matrix A_x;  // n_x x n_x
    Matrix A_q;  // n_x x n_q
    Matrix B;    // n_x x n_u
    Matrix D;    // n_x x n_w
    NonlinearBasis basis;
    double t_s = 0.0;  // sampling time, metadata only

    int n_x() const { return static_cast<int>(A_x.rows()); }
    int n_u() const { return static_cast<int>(B.cols()); }
    int n_w() const { return static_cast<int>(D.cols()); }
    int n_q() const { return basis.n_q(); }
    int n_z() const { return n_x() + n_q(); }

    void validate() const;
};

/// Bounded disturbance: each component uniform on [-delta, delta].
struct DisturbanceSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;

    Vector sample(int n_w, std::uint64_t stream, std::uint64_t step) const {
        CounterRng rng(seed);
        Vector w(n_w);
        for (int j = 0; j < n_w; ++j)
            w[j] = rng.uniform(stream, step * static_cast<std::uint64_t>(n_w) + j, -delta, delta);
        return w;
    }
};

/// Z(x) = [x; Q(x)]; the first n_x entries are x itself.
Vector eval_basis(const PlantModel& model, const Vector& x);

/// One exact step of the plant dynamics.
Vector step(const PlantModel& model, const Vector& x, const Vector& u, const Vector& w);

/// Benchmark plants with the published parameters.
PlantModel make_pendulum();
PlantModel make_cart_spring();

/// Plant text-config round trip (matrices row-major, basis by name).
std::string plant_to_config(const PlantModel& model);
PlantModel plant_from_config(const std::string& text);
void save_plant(const PlantModel& model, const std::string& path);
PlantModel load_plant(const std::string& path);

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace ddsmc
