#include "ddsmc/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace ddsmc {

void SdpBlock::add_coeff(int var, int row, int col, double value) {
    if (value == 0.0) return;
    auto& lst = coeffs_[var];
    lst.push_back({row, col, value});
    if (row != col) lst.push_back({col, row, value});
}

void SdpBlock::add_const(int row, int col, double value) {
    F0_(row, col) += value;
    if (row != col) F0_(col, row) += value;
}

Matrix SdpBlock::eval(const Vector& theta) const {
    Matrix M = F0_;
    for (const auto& [var, entries] : coeffs_) {
        const double t = theta[var];
        if (t == 0.0) continue;
        for (const auto& e : entries) M(e.row, e.col) += t * e.value;
    }
    return M;
}

Matrix SdpProblem::eq_matrix() const {
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(eq_rows.size()), n);
    for (size_t r = 0; r < eq_rows.size(); ++r)
        for (const auto& [i, v] : eq_rows[r]) A(static_cast<Eigen::Index>(r), i) += v;
    return A;
}

Vector SdpProblem::eq_vector() const {
    return Eigen::Map<const Vector>(eq_rhs.data(), static_cast<Eigen::Index>(eq_rhs.size()));
}

double SdpProblem::total_cone_dim() const {
    double nu = 0;
    for (const auto& b : blocks) nu += b.dim();
    return nu;
}

std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Feasible: return "feasible";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::InfeasibleEqualities: return "infeasible_equalities";
        case SdpStatus::SolverError: return "solver_error";
    }
    return "unknown";
}

namespace {

bool trace_enabled() {
    static const bool on = std::getenv("DDSMC_SDP_TRACE") != nullptr;
    return on;
}

// Newton machinery for  min eta * c.theta - sum_j log det F_j(theta)
// restricted to the affine set A theta = b (steps satisfy A dtheta = 0).
class BarrierEngine {
public:
    BarrierEngine(const SdpProblem& prob, Matrix A, const SdpOptions& opts)
        : prob_(prob), A_(std::move(A)), opts_(opts) {}

    bool all_pd(const Vector& theta) const {
        for (const auto& b : prob_.blocks) {
            Eigen::LLT<Matrix> llt(b.eval(theta));
            if (llt.info() != Eigen::Success) return false;
        }
        return true;
    }

    // Barrier value; ok=false if any block is not PD.
    double value(const Vector& theta, double eta, const Vector& cvec, bool& ok) const {
        double f = eta * cvec.dot(theta);
        ok = true;
        for (const auto& b : prob_.blocks) {
            Eigen::LLT<Matrix> llt(b.eval(theta));
            if (llt.info() != Eigen::Success) {
                ok = false;
                return 0.0;
            }
            const Matrix L = llt.matrixL();
            for (int i = 0; i < b.dim(); ++i) f -= 2.0 * std::log(L(i, i));
        }
        return f;
    }

    enum class Centering { Converged, Budget, Stalled };

    // One centering run at fixed eta, to half squared Newton decrement <= tol.
    Centering center(Vector& theta, double eta, const Vector& cvec, int& steps_used,
                     int max_steps, double tol, Vector* eq_multipliers = nullptr) {
        const int n = prob_.n;
        const Eigen::Index m = A_.rows();
        for (int it = 0; it < max_steps; ++it) {
            Vector g = eta * cvec;
            Matrix H = Matrix::Zero(n, n);
            bool pd = accumulate(theta, g, H);
            if (!pd) return Centering::Stalled;  // caller guarantees interior start

            // Jacobi-equilibrated KKT step via Schur complement on H
            const Vector d = H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
            Matrix Hs = d.asDiagonal() * H * d.asDiagonal();
            double ridge = 1e-13;
            Eigen::LLT<Matrix> hllt;
            for (;;) {
                Matrix Hreg = Hs;
                Hreg.diagonal().array() += ridge;
                hllt.compute(Hreg);
                if (hllt.info() == Eigen::Success) break;
                ridge *= 1e3;
                if (ridge > 1e-3) return Centering::Stalled;
            }
            const Vector gs = d.asDiagonal() * g;
            Vector dtheta;
            Vector lam;
            if (m > 0) {
                const Matrix As = A_ * d.asDiagonal();
                Matrix HiAt = hllt.solve(As.transpose());
                Matrix Sm = As * HiAt;
                Vector hig = hllt.solve(gs);
                lam = Sm.ldlt().solve(-(As * hig));
                dtheta = d.asDiagonal() * Vector(-hllt.solve(gs + As.transpose() * lam));
            } else {
                dtheta = d.asDiagonal() * Vector(-hllt.solve(gs));
            }
            double dec = -g.dot(dtheta);
            if (dec < 0) dec = 0;
            ++steps_used;

            bool ok0 = true;
            const double f0 = value(theta, eta, cvec, ok0);
            double alpha = 1.0;
            bool moved = false;
            while (alpha > 1e-14) {
                const Vector trial = theta + alpha * dtheta;
                bool ok = true;
                const double ft = value(trial, eta, cvec, ok);
                if (ok && ft <= f0 - 0.25 * alpha * dec) {
                    theta = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (trace_enabled() && (it % 10 == 0 || 0.5 * dec <= tol))
                std::fprintf(stderr, "[sdp] eta=%.3e it=%d dec/2=%.3e alpha=%.2e obj=%.6e\n",
                             eta, it, 0.5 * dec, alpha, cvec.dot(theta));
            if (0.5 * dec <= tol) {
                if (eq_multipliers && m > 0) *eq_multipliers = lam / std::max(eta, 1e-300);
                return Centering::Converged;
            }
            if (!moved) return Centering::Stalled;
        }
        return Centering::Budget;
    }

private:
    // Gradient/Hessian of -sum log det F_j at theta, added into g and H.
    // Returns false if some block is not PD.
    bool accumulate(const Vector& theta, Vector& g, Matrix& H) const {
        for (const auto& b : prob_.blocks) {
            Eigen::LLT<Matrix> llt(b.eval(theta));
            if (llt.info() != Eigen::Success) return false;
            const Matrix S = llt.solve(Matrix::Identity(b.dim(), b.dim()));

            std::vector<std::pair<int, const std::vector<SdpBlock::Entry>*>> vars;
            vars.reserve(b.coeffs().size());
            for (const auto& [var, entries] : b.coeffs()) vars.emplace_back(var, &entries);

            for (const auto& [var, entries] : vars) {
                double acc = 0.0;
                for (const auto& e : *entries) acc += e.value * S(e.col, e.row);
                g[var] -= acc;
            }
            for (size_t ii = 0; ii < vars.size(); ++ii) {
                const auto& [vi, li] = vars[ii];
                for (size_t kk = ii; kk < vars.size(); ++kk) {
                    const auto& [vk, lk] = vars[kk];
                    double acc = 0.0;
                    for (const auto& e1 : *li)
                        for (const auto& e2 : *lk)
                            acc += e1.value * e2.value * S(e2.col, e1.row) * S(e1.col, e2.row);
                    H(vi, vk) += acc;
                    if (vi != vk) H(vk, vi) += acc;
                }
            }
        }
        return true;
    }

    const SdpProblem& prob_;
    Matrix A_;
    const SdpOptions& opts_;
};

Vector least_squares(const Matrix& A, const Vector& b) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    return cod.solve(b);
}

}  // namespace

SdpSolution BarrierSolver::solve(const SdpProblem& prob, const SdpOptions& opts) {
    SdpSolution sol;
    const int n = prob.n;
    const Matrix A = prob.eq_matrix();
    const Vector b = prob.eq_vector();

    Vector theta = Vector::Zero(n);
    if (A.rows() > 0) {
        theta = least_squares(A, b);
        if ((A * theta - b).norm() > 1e-9 * (1.0 + b.norm())) {
            sol.status = SdpStatus::InfeasibleEqualities;
            sol.message = "linear equality constraints are inconsistent";
            return sol;
        }
    }

    // Boxed working copy: +-R bounds per variable keep the barrier bounded
    // along directions the objective and cone blocks leave free.
    const double R = std::max(opts.var_bound_floor, 10.0 * theta.cwiseAbs().maxCoeff());
    SdpProblem work = prob;
    for (int i = 0; i < n; ++i) {
        SdpBlock& hi = work.add_block(1);
        hi.add_const(0, 0, R);
        hi.add_coeff(i, 0, 0, -1.0);
        SdpBlock& lo = work.add_block(1);
        lo.add_const(0, 0, R);
        lo.add_coeff(i, 0, 0, 1.0);
    }
    const double nu = work.total_cone_dim();

    BarrierEngine engine(work, A, opts);
    int steps = 0;

    // ---------- Phase I: min t with every block shifted by t*I ----------
    if (!engine.all_pd(theta)) {
        SdpProblem p1(n + 1);
        p1.c = Vector::Zero(n + 1);
        p1.c[n] = 1.0;
        for (const auto& blk : work.blocks) {
            SdpBlock& nb = p1.add_block(blk.dim());
            for (int r = 0; r < blk.dim(); ++r) {
                nb.add_coeff(n, r, r, 1.0);
                for (int c2 = r; c2 < blk.dim(); ++c2)
                    if (blk.constant()(r, c2) != 0.0) nb.add_const(r, c2, blk.constant()(r, c2));
            }
            for (const auto& [var, entries] : blk.coeffs())
                for (const auto& e : entries)
                    if (e.row <= e.col) nb.add_coeff(var, e.row, e.col, e.value);
        }
        Matrix A1(A.rows(), n + 1);
        if (A.rows() > 0) {
            A1 << A, Vector::Zero(A.rows());
        }

        double t0 = 0.0;
        for (const auto& blk : work.blocks) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(blk.eval(theta), Eigen::EigenvaluesOnly);
            t0 = std::max(t0, -es.eigenvalues().minCoeff());
        }
        Vector th1(n + 1);
        th1 << theta, t0 + 1.0;

        BarrierEngine e1(p1, A1, opts);
        // start with the objective force balancing the barrier's pull on t
        double eta = (nu + 1.0) / std::max(1.0, th1[n]);
        bool feasible = false;
        for (;;) {
            const auto out = e1.center(th1, eta, p1.c, steps, opts.max_newton_per_stage, opts.stage_tol);
            const double t = th1[n];
            if (engine.all_pd(th1.head(n))) {
                feasible = true;
                break;
            }
            if (out == BarrierEngine::Centering::Stalled) break;
            if (steps > opts.max_newton_total) {
                sol.status = SdpStatus::SolverError;
                sol.message = "newton budget exhausted in phase I";
                sol.newton_steps = steps;
                return sol;
            }
            if (out == BarrierEngine::Centering::Budget) continue;  // keep the same eta
            const double gap = (nu + 1.0) / eta;
            if (t > 0 && gap < 0.25 * t) break;
            if (gap < 1e-14 * std::max(1.0, std::abs(t))) break;
            eta *= opts.mu;
        }
        if (!feasible) {
            sol.status = SdpStatus::Infeasible;
            sol.phase1_margin = th1[n];
            sol.newton_steps = steps;
            char msg[128];
            std::snprintf(msg, sizeof(msg),
                          "no strictly feasible point; best eigenvalue shift %.3e", th1[n]);
            sol.message = msg;
            return sol;
        }
        theta = th1.head(n);
    }

    // ---------- Phase II: minimize the objective ----------
    const bool has_objective = prob.c.norm() > 0;
    double gap = 0.0;
    double objective = prob.c.dot(theta);
    Vector eq_duals;
    if (has_objective) {
        double eta = nu / std::max(1e-3, std::abs(objective));
        for (;;) {
            const auto out =
                engine.center(theta, eta, prob.c, steps, opts.max_newton_per_stage, opts.stage_tol, &eq_duals);
            objective = prob.c.dot(theta);
            gap = nu / eta;
            if (out == BarrierEngine::Centering::Stalled) {
                sol.message = "centering stalled in phase II; gap=" + std::to_string(gap);
                break;
            }
            if (steps > opts.max_newton_total) {
                sol.message = "newton budget exhausted in phase II; gap=" + std::to_string(gap);
                break;
            }
            if (out == BarrierEngine::Centering::Budget) continue;  // keep the same eta
            if (gap <= std::max(opts.gap_abs, opts.gap_rel * std::abs(objective))) break;
            eta *= opts.mu;
        }
    } else {
        engine.center(theta, 1.0, prob.c, steps, 8 * opts.max_newton_per_stage, opts.newton_tol, &eq_duals);
        objective = 0.0;
    }
    sol.objective_bound = objective - gap;

    // ---------- optional recentering at a pinned near-optimal objective ----------
    if (has_objective && opts.recenter_slack >= 0.0) {
        const double target =
            objective + std::max(opts.recenter_slack * std::max(std::abs(objective), 1e-9), 2.0 * gap);
        Matrix Aaug(A.rows() + 1, n);
        if (A.rows() > 0) Aaug.topRows(A.rows()) = A;
        Aaug.row(A.rows()) = prob.c.transpose();
        Vector baug(b.size() + 1);
        baug << b, target;
        Vector th = theta - least_squares(Aaug, Aaug * theta - baug);
        if (!engine.all_pd(th)) {
            // fall back to centering at the current objective value
            baug[b.size()] = objective;
            th = theta;
        }
        BarrierEngine eng2(work, Aaug, opts);
        eng2.center(th, 1.0, Vector::Zero(n), steps, 8 * opts.max_newton_per_stage, opts.newton_tol, &eq_duals);
        theta = th;
        objective = prob.c.dot(theta);
    }

    // ---------- equality polish ----------
    if (opts.polish_equalities && A.rows() > 0) {
        const Vector corrected = theta - least_squares(A, A * theta - b);
        if (engine.all_pd(corrected)) theta = corrected;
    }

    sol.status = SdpStatus::Feasible;
    sol.theta = theta;
    sol.objective = prob.c.dot(theta);
    sol.gap = gap;
    sol.newton_steps = steps;
    sol.eq_duals = eq_duals;
    for (const auto& blk : prob.blocks) {
        Eigen::LLT<Matrix> llt(blk.eval(theta));
        sol.block_duals.push_back(llt.solve(Matrix::Identity(blk.dim(), blk.dim())));
    }
    return sol;
}

std::unique_ptr<SdpSolver> make_solver(const std::string& name) {
    if (name == "barrier") return std::make_unique<BarrierSolver>();
    throw std::invalid_argument("unknown SDP solver backend: " + name);
}

std::string default_solver_name() {
    const char* env = std::getenv("DDSMC_SDP_SOLVER");
    return env && *env ? env : "barrier";
}

}  // namespace ddsmc
