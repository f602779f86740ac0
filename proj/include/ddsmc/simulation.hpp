#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddsmc/controller.hpp"
#include "ddsmc/dataset.hpp"

namespace ddsmc {

enum class ControlMode { FullSmc, NominalOnly, OpenLoop };

struct SimSpec {
    PlantModel model;
    std::optional<ControllerState> controller;  // required unless open loop
    ControlMode mode = ControlMode::FullSmc;
    DisturbanceSpec dist;
    Vector x0;
    int steps = 0;
    double blowup_bound = 1e6;
    std::optional<Matrix> P;  // enables V(k) = x^T P^{-1} x logging
};

struct SimTrace {
    Matrix x;    // n_x x (steps+1)
    Matrix u;    // n_u x steps
    Matrix u_n;  // n_u x steps
    Matrix u_r;  // n_u x steps
    Matrix s;    // m x (steps+1)
    Matrix w;    // n_w x steps
    Vector V;    // steps+1 (zero when no P given)
    // flags filled by check_reaching; empty until then
    std::vector<bool> in_omega;  // steps+1
    std::vector<bool> cond9a;    // steps
    std::vector<bool> cond9b;    // steps
    bool diverged = false;
    int divergence_step = -1;

    int steps() const { return static_cast<int>(u.cols()); }
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, int step_index)
        : std::runtime_error(msg), step(step_index) {}
    int step;
};

/// Closed-loop run: u(k) from the controller, x(k+1) from the plant with a
/// fresh disturbance draw. throw_on_divergence=false records the blow-up
/// instead (sweep mode).
SimTrace run(const SimSpec& spec, bool throw_on_divergence = true);

struct ReachingReport {
    Vector f_bar_obs;   // per-channel max of |N D (d(k) + w(k))| along the run
    Vector lambda;
    Vector radii;
    int violations_9a = 0;
    int violations_9b = 0;
    int checked_outside = 0;  // per-channel step count with |s_i| > radius_i
    int first_entry = -1;     // first step with every channel inside Omega
    double residence = 0.0;   // fraction of steps inside after first entry
};

/// Evaluates the reaching conditions along the trace using the recorded
/// disturbances and the dataset's oracle record; fills the trace flags.
ReachingReport check_reaching(SimTrace& trace, const PlantModel& model,
                              const ControllerState& ctrl, const DataSet& ds,
                              const SynthesisResult& res);

/// A-priori surrogate bound: |N D| (delta + delta sqrt(T) sup ||G Z(x)||)
/// with the supremum sampled over the given state box.
Vector apriori_reaching_bound(const PlantModel& model, const SmcParams& params, const Matrix& G,
                              double delta, int T, const Vector& box_lo, const Vector& box_hi,
                              int samples = 1000, std::uint64_t seed = 0);

struct LyapunovReport {
    int checked = 0;
    int holds = 0;
    double fraction = 1.0;
    double worst_violation = 0.0;  // largest positive left-hand side seen
};

/// Dissipation inequality on the data-based nominal map, driven by the
/// simulated states and the oracle lumped disturbance.
LyapunovReport check_lyapunov(const SimTrace& trace, const PlantModel& model,
                              const ControllerState& ctrl, const DataSet& ds,
                              const SynthesisResult& res);

struct SweepCell {
    double delta = 0.0;
    std::uint64_t seed = 0;
    SdpStatus status = SdpStatus::SolverError;
    double gamma = 0.0;
    bool converged = false;
    bool diverged = false;
};

struct SweepOptions {
    Vector sim_x0;
    int sim_steps = 300;
    double convergence_threshold = 0.05;
    double convergence_fraction = 0.2;  // tail fraction that must stay inside
    int jobs = 1;
    bool simulate = true;
};

/// Convergence indicator: ||x(k)||_inf <= threshold on the whole tail.
bool trace_converged(const SimTrace& trace, double threshold, double tail_fraction);

std::vector<SweepCell> sweep_delta(const PlantModel& model, const ExcitationSpec& exc,
                                   const SynthesisConfig& cfg, const SmcParams& smc,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<std::uint64_t>& seeds,
                                   const SweepOptions& opts);

/// Trace CSV: header row naming columns, one row per step plus a final
/// state-only row.
void save_trace(const SimTrace& trace, const std::string& path,
                const std::vector<std::string>& header_comments = {});

void save_sweep(const std::vector<SweepCell>& cells, const std::string& path);

}  // namespace ddsmc
