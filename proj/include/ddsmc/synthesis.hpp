#pragma once

#include <map>
#include <optional>
#include <string>

#include "ddsmc/dataset.hpp"
#include "ddsmc/sdp.hpp"

namespace ddsmc {

struct SynthesisConfig {
    double eps1 = 1.0;
    double eps2 = 1.0;
    double strictness_margin = 1e-6;  // eta: strict inequalities become >= eta*I
    double solver_tol = 1e-9;
    Matrix N;  // m x n_x sliding matrix, needed for Phi

    // gamma handling: path-follow to the minimum (reported as gamma_opt),
    // then recenter the returned certificate on the slice
    // gamma = (1 + gamma_slack) * minimum. Points near the minimum have
    // needlessly large Y P^{-1} and degrade the closed loop, so the default
    // slice is generous; set a small slack for tight H-infinity certificates.
    bool optimize_gamma = true;
    double gamma_slack = 100.0;
    std::string solver_name;  // empty -> default_solver_name()

    void validate(const Matrix& B) const;
};

/// Decision-variable layout of the synthesis SDP:
/// [vech(P) row-major upper | vec(Y) column-major | gamma].
struct VarLayout {
    int n_x = 0;
    int T = 0;

    int P(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * n_x - i * (i - 1) / 2 + (j - i);
    }
    int Y(int t, int c) const { return n_p() + c * T + t; }
    int gamma() const { return n_p() + T * n_x; }
    int count() const { return gamma() + 1; }
    int n_p() const { return n_x * (n_x + 1) / 2; }
};

/// The 7x7 block inequality plus the linear constraint data it couples to.
/// Block dimensions are [n_x, n_w, n_x, n_x, n_x, T, n_w].
struct LmiBlocks {
    std::vector<int> dims;
    std::vector<int> offsets;
    int n_x = 0, n_u = 0, n_w = 0, n_q = 0, T = 0;
    double eps1 = 1.0, eps2 = 1.0, margin = 0.0;
    Matrix M;         // next-state data (contains the input contribution)
    Matrix Phi;       // I - B (N B)^+ N
    Matrix PhiD;      // Phi * D
    Matrix PhiDDelta; // Phi * D * Delta, Delta = delta * sqrt(T) * I
    Matrix Z0;
    double delta = 0.0;

    int dim() const { return offsets.back(); }

    /// Emit the inequality (shifted by -margin*I) into an SDP block.
    void populate(SdpBlock& blk, const VarLayout& vars) const;

    /// Equality rows coupling Y and P (columns of Z0 Y = [P; 0]).
    void add_equalities(SdpProblem& prob, const VarLayout& vars) const;

    /// Cancellation system for G2: [Z0; M] G2 = [0; I; 0].
    Matrix g2_system() const;
    Matrix g2_rhs() const;

    /// The full symmetric matrix at a candidate point (no margin shift).
    Matrix assemble_at(const Matrix& P, const Matrix& Y, double gamma) const;
};

/// Right (Moore-Penrose) inverse of a full-row-rank matrix.
Matrix right_pseudo_inverse(const Matrix& M);

struct SynthesisResult {
    SdpStatus status = SdpStatus::SolverError;
    std::string message;
    Matrix P;        // n_x x n_x, symmetric positive definite
    Matrix Y;        // T x n_x
    Matrix G2;       // T x n_q
    double gamma = 0.0;      // value consistent with (P, Y)
    double gamma_opt = 0.0;  // best minimum found by the solver
    Matrix G1;       // Y P^{-1}
    Matrix K;        // n_u x n_z = [U0 G1, U0 G2]
    Matrix A_tilde;  // N M G1
    Matrix A_hat;    // M G1, data-based nominal closed-loop matrix
    std::map<std::string, double> residuals;

    bool feasible() const { return status == SdpStatus::Feasible; }
};

LmiBlocks assemble_lmi(const DataSet& ds, const Matrix& B, const Matrix& D,
                       const SynthesisConfig& cfg);

SynthesisResult solve(const DataSet& ds, const Matrix& B, const Matrix& D,
                      const SynthesisConfig& cfg);

/// Convenience grid search over the scalar multipliers, keeping the result
/// with the smallest minimized gamma. Off the default path; eps values are
/// normally fixed by the caller.
SynthesisResult solve_eps_grid(const DataSet& ds, const Matrix& B, const Matrix& D,
                               const SynthesisConfig& cfg, const std::vector<double>& eps1_grid,
                               const std::vector<double>& eps2_grid);

/// Independent re-check of every constraint at the solution; when a ground
/// truth plant is supplied and the dataset carries the disturbance record,
/// also evaluates the nominal-control identity over random states.
struct VerificationReport {
    double factorization_rel = 0.0;          // ||Z0[Y,G2]-diag(P,I)||_F / ||diag(P,I)||_F
    double cancellation_abs = 0.0;          // ||M G2||_F
    double cancellation_rel = 0.0;          // relative to ||M||_F
    double lmi_min_eig = 0.0;        // of the assembled inequality matrix
    double P_min_eig = 0.0;
    std::optional<double> identity_residual;  // Proposition-style oracle check
};

VerificationReport verify_result(const DataSet& ds, const Matrix& B, const Matrix& D,
                                 const SynthesisConfig& cfg, const SynthesisResult& res,
                                 const PlantModel* oracle_plant = nullptr,
                                 int oracle_samples = 100, std::uint64_t oracle_seed = 0,
                                 double oracle_box = 3.141592653589793);

struct NominalStabilityReport {
    Matrix A_hat;
    double spectral_radius = 0.0;
    bool lyapunov_ok = false;  // A^T P^{-1} A - P^{-1} + gamma^{-1} I < 0
};

NominalStabilityReport nominal_stability_check(const DataSet& ds, const SynthesisResult& res);

/// Same inequality evaluated for arbitrary (A_hat, P, gamma); exposed for tests.
bool lyapunov_inequality_holds(const Matrix& A_hat, const Matrix& P, double gamma);

void save_result(const SynthesisResult& res, const SynthesisConfig& cfg, const std::string& path);
SynthesisResult load_result(const std::string& path);

}  // namespace ddsmc
