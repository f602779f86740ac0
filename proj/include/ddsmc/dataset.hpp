#pragma once

#include <optional>
#include <string>

#include "ddsmc/plant.hpp"

namespace ddsmc {

/// Excitation experiment: T samples with per-channel uniform input.
struct ExcitationSpec {
    int T = 0;
    Vector input_lo;  // n_u
    Vector input_hi;  // n_u
    std::optional<Vector> x0;  // default: origin + uniform perturbation in [-0.1, 0.1]
    std::uint64_t seed = 0;
    bool restart = false;        // fresh x0 per sample instead of one contiguous run
    double blowup_bound = 1e6;   // collection aborts past this

    void validate(int n_u) const;
};

struct DataSet {
    Matrix U0;  // n_u x T
    Matrix X0;  // n_x x T
    Matrix X1;  // n_x x T
    Matrix Z0;  // n_z x T
    std::optional<Matrix> W0_oracle;  // n_w x T, simulation-only ground truth
    double delta = 0.0;
    int T = 0;

    int n_x() const { return static_cast<int>(X0.rows()); }
    int n_u() const { return static_cast<int>(U0.rows()); }
    int n_z() const { return static_cast<int>(Z0.rows()); }
};

/// Thrown when the excitation run leaves the blow-up bound.
class CollectionError : public std::runtime_error {
public:
    CollectionError(const std::string& msg, int step_index)
        : std::runtime_error(msg), step(step_index) {}
    int step;
};

/// Run the excitation experiment and assemble the data matrices.
/// W0_oracle records the actual disturbance draws.
DataSet collect(const PlantModel& model, const DisturbanceSpec& dist, const ExcitationSpec& exc);

struct RichnessReport {
    int rank = 0;
    double smallest_sv = 0.0;
    bool rich = false;
};

/// Numerical row rank of Z0. Rich means rank == n_z at the given relative
/// tolerance (smallest kept singular value > tol * largest).
RichnessReport richness_check(const DataSet& ds, double tol = 1e-8);

void save_dataset(const DataSet& ds, const std::string& path);
DataSet load_dataset(const std::string& path);

}  // namespace ddsmc
