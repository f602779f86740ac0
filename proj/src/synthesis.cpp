#include "ddsmc/synthesis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>

#include "ddsmc/csv.hpp"

namespace ddsmc {

Matrix right_pseudo_inverse(const Matrix& M) {
    // M^T (M M^T)^{-1} for full row rank M, via LDLT of the Gram matrix
    const Matrix gram = M * M.transpose();
    Eigen::LDLT<Matrix> ldlt(gram);
    const Vector d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * std::max(0.0, d.maxCoeff()))
        throw std::invalid_argument("right_pseudo_inverse: matrix is not full row rank");
    return ldlt.solve(M).transpose();
}

void SynthesisConfig::validate(const Matrix& B) const {
    if (eps1 <= 0 || eps2 <= 0) throw std::invalid_argument("eps1, eps2 must be > 0");
    if (strictness_margin <= 0) throw std::invalid_argument("strictness_margin must be > 0");
    if (solver_tol <= 0) throw std::invalid_argument("solver_tol must be > 0");
    if (N.rows() == 0 || N.cols() != B.rows())
        throw std::invalid_argument("N must be m x n_x");
    if (N.rows() > B.cols()) throw std::invalid_argument("N rows must not exceed n_u");
    const Matrix NB = N * B;
    Eigen::ColPivHouseholderQR<Matrix> qr(NB);
    if (qr.rank() < NB.rows())
        throw std::invalid_argument("N B must have full row rank");
}

LmiBlocks assemble_lmi(const DataSet& ds, const Matrix& B, const Matrix& D,
                       const SynthesisConfig& cfg) {
    cfg.validate(B);
    LmiBlocks L;
    L.n_x = ds.n_x();
    L.n_u = ds.n_u();
    L.n_w = static_cast<int>(D.cols());
    L.n_q = ds.n_z() - ds.n_x();
    L.T = ds.T;
    L.eps1 = cfg.eps1;
    L.eps2 = cfg.eps2;
    L.margin = cfg.strictness_margin;
    L.delta = ds.delta;
    // X1 already carries the B U0 contribution of the recorded inputs, so it
    // is the data value of the nominal closed-loop numerator; only the
    // disturbance part remains unknown and is covered by the Delta blocks.
    L.M = ds.X1;
    L.Z0 = ds.Z0;
    const Matrix NBp = right_pseudo_inverse(cfg.N * B);
    L.Phi = Matrix::Identity(L.n_x, L.n_x) - B * NBp * cfg.N;
    L.PhiD = L.Phi * D;
    L.PhiDDelta = L.PhiD * (ds.delta * std::sqrt(static_cast<double>(ds.T)) *
                            Matrix::Identity(L.n_w, L.n_w));
    L.dims = {L.n_x, L.n_w, L.n_x, L.n_x, L.n_x, L.T, L.n_w};
    L.offsets.assign(1, 0);
    for (int d : L.dims) L.offsets.push_back(L.offsets.back() + d);
    return L;
}

void LmiBlocks::populate(SdpBlock& blk, const VarLayout& vars) const {
    const auto& off = offsets;
    auto addP = [&](int bi, int bj, double scale) {
        for (int i = 0; i < n_x; ++i)
            for (int j = 0; j < n_x; ++j) {
                const int r = off[bi] + i, c = off[bj] + j;
                if (r <= c) blk.add_coeff(vars.P(i, j), r, c, scale);
            }
    };
    addP(0, 0, 1.0);
    addP(0, 2, 1.0);
    addP(3, 3, eps1 / (1.0 + eps1));
    addP(4, 4, 1.0 / eps1);
    // (1,4): (M Y)^T, entry (i, j) = sum_t M(j, t) Y(t, i)
    for (int i = 0; i < n_x; ++i)
        for (int j = 0; j < n_x; ++j)
            for (int t = 0; t < T; ++t)
                if (M(j, t) != 0.0) blk.add_coeff(vars.Y(t, i), off[0] + i, off[3] + j, M(j, t));
    // (1,6): Y^T
    for (int i = 0; i < n_x; ++i)
        for (int t = 0; t < T; ++t) blk.add_coeff(vars.Y(t, i), off[0] + i, off[5] + t, 1.0);
    // (2,2), (3,3): gamma I
    for (int j = 0; j < n_w; ++j) blk.add_coeff(vars.gamma(), off[1] + j, off[1] + j, 1.0);
    for (int j = 0; j < n_x; ++j) blk.add_coeff(vars.gamma(), off[2] + j, off[2] + j, 1.0);
    // constants: (2,5) (Phi D)^T, (4,7) Phi D Delta, (6,6), (7,7)
    for (int j = 0; j < n_w; ++j)
        for (int i = 0; i < n_x; ++i) blk.add_const(off[1] + j, off[4] + i, PhiD(i, j));
    for (int i = 0; i < n_x; ++i)
        for (int j = 0; j < n_w; ++j) blk.add_const(off[3] + i, off[6] + j, PhiDDelta(i, j));
    for (int t = 0; t < T; ++t) blk.add_const(off[5] + t, off[5] + t, eps2);
    for (int j = 0; j < n_w; ++j) blk.add_const(off[6] + j, off[6] + j, 1.0 / eps2);
    for (int r = 0; r < dim(); ++r) blk.add_const(r, r, -margin);
}

void LmiBlocks::add_equalities(SdpProblem& prob, const VarLayout& vars) const {
    const int n_z = n_x + n_q;
    for (int r = 0; r < n_z; ++r)
        for (int c = 0; c < n_x; ++c) {
            std::vector<std::pair<int, double>> row;
            for (int t = 0; t < T; ++t)
                if (Z0(r, t) != 0.0) row.emplace_back(vars.Y(t, c), Z0(r, t));
            if (r < n_x) row.emplace_back(vars.P(r, c), -1.0);
            prob.add_eq(std::move(row), 0.0);
        }
}

Matrix LmiBlocks::g2_system() const {
    Matrix S(n_x + n_q + n_x, T);
    S << Z0, M;
    return S;
}

Matrix LmiBlocks::g2_rhs() const {
    Matrix rhs = Matrix::Zero(n_x + n_q + n_x, n_q);
    rhs.block(n_x, 0, n_q, n_q) = Matrix::Identity(n_q, n_q);
    return rhs;
}

Matrix LmiBlocks::assemble_at(const Matrix& P, const Matrix& Y, double gamma) const {
    const auto& off = offsets;
    Matrix A = Matrix::Zero(dim(), dim());
    auto put = [&](int bi, int bj, const Matrix& V) {
        A.block(off[bi], off[bj], V.rows(), V.cols()) = V;
        if (bi != bj) A.block(off[bj], off[bi], V.cols(), V.rows()) = V.transpose();
    };
    put(0, 0, P);
    put(0, 2, P);
    put(0, 3, (M * Y).transpose());
    put(0, 5, Y.transpose());
    put(1, 1, gamma * Matrix::Identity(n_w, n_w));
    put(1, 4, PhiD.transpose());
    put(2, 2, gamma * Matrix::Identity(n_x, n_x));
    put(3, 3, eps1 / (1.0 + eps1) * P);
    put(3, 6, PhiDDelta);
    put(4, 4, (1.0 / eps1) * P);
    put(5, 5, eps2 * Matrix::Identity(T, T));
    put(6, 6, (1.0 / eps2) * Matrix::Identity(n_w, n_w));
    return A;
}

namespace {

Matrix diag_PI(const Matrix& P, int n_q) {
    const int n_x = static_cast<int>(P.rows());
    Matrix d = Matrix::Zero(n_x + n_q, n_x + n_q);
    d.topLeftCorner(n_x, n_x) = P;
    d.bottomRightCorner(n_q, n_q).setIdentity();
    return d;
}

double spectral_radius(const Matrix& A) {
    return A.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

SynthesisResult solve(const DataSet& ds, const Matrix& B, const Matrix& D,
                      const SynthesisConfig& cfg) {
    SynthesisResult res;
    const auto rich = richness_check(ds);
    if (!rich.rich) {
        res.status = SdpStatus::Infeasible;
        res.message = "Z0 is not full row rank (rank " + std::to_string(rich.rank) +
                      "), the factorization constraint is unsatisfiable";
        return res;
    }
    const LmiBlocks L = assemble_lmi(ds, B, D, cfg);

    // G2 decouples from the inequality: any solution of the cancellation
    // system works, take the least-norm one.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(L.g2_system());
    const Matrix G2 = cod.solve(L.g2_rhs());
    const double g2_res = (L.g2_system() * G2 - L.g2_rhs()).norm();
    if (g2_res > 1e-6 * (1.0 + L.g2_rhs().norm())) {
        res.status = SdpStatus::Infeasible;
        res.message = "cancellation equations have no solution (residual " +
                      std::to_string(g2_res) + ")";
        return res;
    }

    const VarLayout vars{L.n_x, L.T};
    SdpProblem prob(vars.count());
    if (cfg.optimize_gamma) prob.c[vars.gamma()] = 1.0;
    L.add_equalities(prob, vars);
    L.populate(prob.add_block(L.dim()), vars);
    {
        SdpBlock& pb = prob.add_block(L.n_x);
        for (int i = 0; i < L.n_x; ++i) {
            for (int j = i; j < L.n_x; ++j) pb.add_coeff(vars.P(i, j), i, j, 1.0);
            pb.add_const(i, i, -cfg.strictness_margin);
        }
        SdpBlock& gb = prob.add_block(1);
        gb.add_coeff(vars.gamma(), 0, 0, 1.0);
        gb.add_const(0, 0, -cfg.strictness_margin);
    }

    SdpOptions opts;
    opts.newton_tol = cfg.solver_tol;
    opts.recenter_slack = cfg.optimize_gamma ? cfg.gamma_slack : -1.0;
    auto solver = make_solver(cfg.solver_name.empty() ? default_solver_name() : cfg.solver_name);
    const SdpSolution sol = solver->solve(prob, opts);

    res.status = sol.status;
    res.message = sol.message;
    if (sol.status != SdpStatus::Feasible) return res;

    res.P.resize(L.n_x, L.n_x);
    for (int i = 0; i < L.n_x; ++i)
        for (int j = i; j < L.n_x; ++j) res.P(i, j) = res.P(j, i) = sol.theta[vars.P(i, j)];
    res.Y.resize(L.T, L.n_x);
    for (int c = 0; c < L.n_x; ++c)
        for (int t = 0; t < L.T; ++t) res.Y(t, c) = sol.theta[vars.Y(t, c)];
    res.gamma = sol.theta[vars.gamma()];
    res.gamma_opt = cfg.optimize_gamma ? sol.objective_bound : res.gamma;
    res.G2 = G2;

    // G1 = Y P^{-1} through a symmetric factorization of P
    Eigen::LDLT<Matrix> pldlt(res.P);
    res.G1 = pldlt.solve(res.Y.transpose()).transpose();
    res.K.resize(L.n_u, L.n_x + L.n_q);
    res.K << ds.U0 * res.G1, ds.U0 * res.G2;
    res.A_hat = L.M * res.G1;
    res.A_tilde = cfg.N * res.A_hat;

    const Matrix YG2 = (Matrix(L.T, L.n_x + L.n_q) << res.Y, res.G2).finished();
    const Matrix dPI = diag_PI(res.P, L.n_q);
    res.residuals["factorization_residual"] = (ds.Z0 * YG2 - dPI).norm() / dPI.norm();
    res.residuals["cancellation_residual"] = (L.M * res.G2).norm();
    Eigen::SelfAdjointEigenSolver<Matrix> es(L.assemble_at(res.P, res.Y, res.gamma),
                                             Eigen::EigenvaluesOnly);
    res.residuals["lmi_min_eig"] = es.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> esP(res.P, Eigen::EigenvaluesOnly);
    res.residuals["P_min_eig"] = esP.eigenvalues().minCoeff();
    res.residuals["gamma_gap"] = sol.gap;
    res.residuals["newton_steps"] = sol.newton_steps;
    return res;
}

SynthesisResult solve_eps_grid(const DataSet& ds, const Matrix& B, const Matrix& D,
                               const SynthesisConfig& cfg, const std::vector<double>& eps1_grid,
                               const std::vector<double>& eps2_grid) {
    if (eps1_grid.empty() || eps2_grid.empty())
        throw std::invalid_argument("solve_eps_grid: empty grid");
    SynthesisResult best;
    for (double e1 : eps1_grid)
        for (double e2 : eps2_grid) {
            SynthesisConfig c = cfg;
            c.eps1 = e1;
            c.eps2 = e2;
            SynthesisResult r = solve(ds, B, D, c);
            if (!r.feasible()) continue;
            if (!best.feasible() || r.gamma_opt < best.gamma_opt) best = std::move(r);
        }
    if (!best.feasible()) best.message = "no feasible point on the eps grid";
    return best;
}

VerificationReport verify_result(const DataSet& ds, const Matrix& B, const Matrix& D,
                                 const SynthesisConfig& cfg, const SynthesisResult& res,
                                 const PlantModel* oracle_plant, int oracle_samples,
                                 std::uint64_t oracle_seed, double oracle_box) {
    if (!res.feasible()) throw std::invalid_argument("verify_result needs a feasible result");
    const LmiBlocks L = assemble_lmi(ds, B, D, cfg);
    VerificationReport rep;
    const Matrix YG2 = (Matrix(L.T, L.n_x + L.n_q) << res.Y, res.G2).finished();
    const Matrix dPI = diag_PI(res.P, L.n_q);
    rep.factorization_rel = (ds.Z0 * YG2 - dPI).norm() / dPI.norm();
    rep.cancellation_abs = (L.M * res.G2).norm();
    rep.cancellation_rel = rep.cancellation_abs / L.M.norm();
    Eigen::SelfAdjointEigenSolver<Matrix> es(L.assemble_at(res.P, res.Y, res.gamma),
                                             Eigen::EigenvaluesOnly);
    rep.lmi_min_eig = es.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> esP(res.P, Eigen::EigenvaluesOnly);
    rep.P_min_eig = esP.eigenvalues().minCoeff();

    if (oracle_plant && ds.W0_oracle) {
        // max over random states of
        //   || N A Z(x) + N B K Z(x) - A_tilde x - N D d(x) ||,  d = -W0 G Z(x)
        const Matrix A = (Matrix(L.n_x, L.n_x + L.n_q) << oracle_plant->A_x, oracle_plant->A_q)
                             .finished();
        const Matrix G = (Matrix(L.T, L.n_x + L.n_q) << res.G1, res.G2).finished();
        CounterRng rng(oracle_seed);
        double worst = 0.0;
        for (int s = 0; s < oracle_samples; ++s) {
            Vector x(L.n_x);
            for (int i = 0; i < L.n_x; ++i)
                x[i] = rng.uniform(0, static_cast<std::uint64_t>(s) * L.n_x + i, -oracle_box,
                                   oracle_box);
            const Vector Z = eval_basis(*oracle_plant, x);
            const Vector lhs = cfg.N * (A * Z) + cfg.N * (B * (res.K * Z));
            const Vector d = -(*ds.W0_oracle) * (G * Z);
            const Vector rhs = res.A_tilde * x + cfg.N * (D * d);
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
        rep.identity_residual = worst;
    }
    return rep;
}

bool lyapunov_inequality_holds(const Matrix& A_hat, const Matrix& P, double gamma) {
    Eigen::LDLT<Matrix> pldlt(P);
    const int n = static_cast<int>(P.rows());
    const Matrix Pinv = pldlt.solve(Matrix::Identity(n, n));
    const Matrix Q = A_hat.transpose() * Pinv * A_hat - Pinv +
                     (1.0 / gamma) * Matrix::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() < 0.0;
}

NominalStabilityReport nominal_stability_check(const DataSet& ds, const SynthesisResult& res) {
    if (!res.feasible())
        throw std::invalid_argument("nominal_stability_check needs a feasible result");
    NominalStabilityReport rep;
    rep.A_hat = ds.X1 * res.G1;
    rep.spectral_radius = spectral_radius(rep.A_hat);
    rep.lyapunov_ok = lyapunov_inequality_holds(rep.A_hat, res.P, res.gamma);
    return rep;
}

void save_result(const SynthesisResult& res, const SynthesisConfig& cfg, const std::string& path) {
    csv::BlockFile bf;
    bf.put("status", to_string(res.status));
    if (!res.message.empty()) bf.put("message", res.message);
    bf.put("N", cfg.N);
    bf.put("eps1", cfg.eps1);
    bf.put("eps2", cfg.eps2);
    bf.put("margin", cfg.strictness_margin);
    if (res.feasible()) {
        bf.put("P", res.P);
        bf.put("Y", res.Y);
        bf.put("G2", res.G2);
        bf.put("G1", res.G1);
        bf.put("K", res.K);
        bf.put("A_tilde", res.A_tilde);
        bf.put("A_hat", res.A_hat);
        bf.put("gamma", res.gamma);
        bf.put("gamma_opt", res.gamma_opt);
        for (const auto& [k, v] : res.residuals) bf.put("residual_" + k, v);
    }
    csv::write_file(bf, path, {"ddsmc synthesis result"});
}

SynthesisResult load_result(const std::string& path) {
    const auto bf = csv::read_file(path);
    SynthesisResult res;
    const std::string st = bf.text("status");
    if (st == "feasible") res.status = SdpStatus::Feasible;
    else if (st == "infeasible") res.status = SdpStatus::Infeasible;
    else if (st == "infeasible_equalities") res.status = SdpStatus::InfeasibleEqualities;
    else res.status = SdpStatus::SolverError;
    if (bf.texts.count("message")) res.message = bf.text("message");
    if (res.feasible()) {
        res.P = bf.matrix("P");
        res.Y = bf.matrix("Y");
        res.G2 = bf.matrix("G2");
        res.G1 = bf.matrix("G1");
        res.K = bf.matrix("K");
        res.A_tilde = bf.matrix("A_tilde");
        res.A_hat = bf.matrix("A_hat");
        res.gamma = bf.scalar("gamma");
        res.gamma_opt = bf.scalar("gamma_opt");
        for (const auto& [k, v] : bf.scalars)
            if (k.rfind("residual_", 0) == 0) res.residuals[k.substr(9)] = v;
    }
    return res;
}

}  // namespace ddsmc
