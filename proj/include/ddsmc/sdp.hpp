#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ddsmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One affine-symmetric constraint block F(theta) = F0 + sum_i theta_i Fi,
/// required to be positive semidefinite. Coefficient matrices are stored as
/// sparse entry lists; off-diagonal entries are mirrored automatically.
class SdpBlock {
public:
    explicit SdpBlock(int dim) : dim_(dim), F0_(Matrix::Zero(dim, dim)) {}

    void add_coeff(int var, int row, int col, double value);
    void add_const(int row, int col, double value);

    int dim() const { return dim_; }
    const Matrix& constant() const { return F0_; }
    Matrix eval(const Vector& theta) const;

    struct Entry {
        int row, col;
        double value;
    };
    const std::map<int, std::vector<Entry>>& coeffs() const { return coeffs_; }

private:
    int dim_;
    Matrix F0_;
    std::map<int, std::vector<Entry>> coeffs_;  // full storage (both triangles)
};

/// min c.theta  s.t.  A theta = b  and every block PSD.
struct SdpProblem {
    explicit SdpProblem(int n_vars) : n(n_vars), c(Vector::Zero(n_vars)) {}

    int n;
    Vector c;
    std::vector<SdpBlock> blocks;
    std::vector<std::vector<std::pair<int, double>>> eq_rows;
    std::vector<double> eq_rhs;

    SdpBlock& add_block(int dim) {
        blocks.emplace_back(dim);
        return blocks.back();
    }
    void add_eq(std::vector<std::pair<int, double>> row, double rhs) {
        eq_rows.push_back(std::move(row));
        eq_rhs.push_back(rhs);
    }
    Matrix eq_matrix() const;
    Vector eq_vector() const;
    double total_cone_dim() const;
};

enum class SdpStatus { Feasible, Infeasible, InfeasibleEqualities, SolverError };

std::string to_string(SdpStatus s);

struct SdpSolution {
    SdpStatus status = SdpStatus::SolverError;
    Vector theta;
    double objective = 0.0;      // c.theta at the returned point
    double objective_bound = 0.0;  // best lower-bound estimate (objective - gap)
    double gap = 0.0;            // duality gap bound from the barrier parameter
    double phase1_margin = 0.0;  // >0 means residual infeasibility margin
    int newton_steps = 0;
    std::string message;
    std::vector<Matrix> block_duals;  // approximate central-path duals
    Vector eq_duals;
};

struct SdpOptions {
    double newton_tol = 1e-9;    // half squared Newton decrement, final centering
    double stage_tol = 1e-5;     // looser tolerance while following the path
    int max_newton_per_stage = 60;
    int max_newton_total = 4000;
    double mu = 30.0;            // barrier parameter growth
    double gap_abs = 1e-9;
    double gap_rel = 1e-2;       // relative to |objective|
    double recenter_slack = -1.0;  // if >= 0: recenter at obj*(1+slack)+gap
    bool polish_equalities = true;
    // Every variable is boxed to make the barrier bounded along recession
    // directions; the box is at least this wide and grows with the start.
    double var_bound_floor = 1e6;
};

/// Abstract semidefinite-program solver. Concrete backend selected by name.
class SdpSolver {
public:
    virtual ~SdpSolver() = default;
    virtual SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts) = 0;
    virtual std::string name() const = 0;
};

/// Log-barrier path-following solver with equality-constrained Newton steps.
class BarrierSolver final : public SdpSolver {
public:
    SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts) override;
    std::string name() const override { return "barrier"; }
};

/// Factory. Known names: "barrier". Throws std::invalid_argument otherwise.
std::unique_ptr<SdpSolver> make_solver(const std::string& name);

/// Solver name from DDSMC_SDP_SOLVER, defaulting to "barrier".
std::string default_solver_name();

}  // namespace ddsmc
