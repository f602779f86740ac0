#include "ddsmc/controller.hpp"

#include <cmath>

namespace ddsmc {

void SmcParams::validate(const Matrix& B) const {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must be in (0, 1)");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
    if (rho.size() != m()) throw std::invalid_argument("rho must have one entry per sliding variable");
    for (int i = 0; i < m(); ++i)
        if (!(rho[i] > 0.0 && rho[i] < 1.0))
            throw std::invalid_argument("each rho_i must be in (0, 1)");
    if (N.cols() != B.rows()) throw std::invalid_argument("N columns must equal n_x");
    right_pseudo_inverse(N * B);  // throws when N B is rank deficient
}

ControllerState ControllerState::from_result(const SynthesisResult& res, const SmcParams& params,
                                             const Matrix& B, const Matrix* MG2) {
    if (!res.feasible())
        throw std::invalid_argument("controller requires a feasible synthesis result");
    params.validate(B);
    ControllerState c;
    c.K = res.K;
    c.A_tilde = res.A_tilde;
    // lifted variant [A~, N (M G2)]; the second part is the cancellation
    // residual, zero up to solver precision
    c.A_tilde_z = Matrix::Zero(params.m(), res.K.cols());
    c.A_tilde_z.leftCols(res.A_tilde.cols()) = res.A_tilde;
    if (MG2) c.A_tilde_z.rightCols(MG2->cols()) = params.N * (*MG2);
    c.NB_pinv = right_pseudo_inverse(params.N * B);
    c.params = params;
    return c;
}

Vector sliding_variable(const SmcParams& params, const Vector& x) {
    if (x.size() != params.N.cols())
        throw std::invalid_argument("sliding_variable: state dimension mismatch");
    return params.N * x;
}

ReachingGains reaching_gains(const SmcParams& params, const Vector& s) {
    ReachingGains g;
    g.phi.resize(s.size());
    g.varphi.resize(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        // 2 / (e^{-a} + e^{a}) = 1 / cosh(a); saturate the exponent so large
        // |s| underflows to 0 instead of overflowing
        const double a = std::min(700.0, std::abs(params.sigma * s[i]));
        g.phi[i] = 1.0 / std::cosh(a);
        g.varphi[i] = params.rho[i] * std::abs(s[i]);
    }
    return g;
}

ControlOutput control(const ControllerState& ctrl, const Vector& Z, const Vector& x) {
    const auto& p = ctrl.params;
    if (x.size() != p.N.cols() || Z.size() != ctrl.K.cols())
        throw std::invalid_argument("control: dimension mismatch");
    ControlOutput out;
    out.s = p.N * x;
    const ReachingGains g = reaching_gains(p, out.s);
    Vector reach(p.m());
    for (int i = 0; i < p.m(); ++i)
        reach[i] = (1.0 - p.q) * g.phi[i] * out.s[i] - g.varphi[i] * sgn(out.s[i]);
    const Vector cancel = p.cancel_on_basis ? Vector(ctrl.A_tilde_z * Z)
                                            : Vector(ctrl.A_tilde * x);
    out.u_n = ctrl.K * Z;
    out.u_r = ctrl.NB_pinv * (-cancel + reach);
    out.u = out.u_n + out.u_r;
    return out;
}

OmegaBound omega_bound(const SmcParams& params, const Vector& f_bar) {
    if (f_bar.size() != params.m())
        throw std::invalid_argument("omega_bound: f_bar dimension mismatch");
    OmegaBound b;
    b.lambda.resize(params.m());
    b.radii.resize(params.m());
    for (int i = 0; i < params.m(); ++i) {
        if (f_bar[i] < 0) throw std::invalid_argument("omega_bound: f_bar must be nonnegative");
        const double a = 2.0 - params.q - params.rho[i];
        const double c = params.q + params.rho[i];
        if (a <= 0.0 || c <= 0.0)
            throw std::invalid_argument("omega_bound: degenerate q + rho");
        b.lambda[i] = std::max(1.0 / a, 1.0 / c);
        b.radii[i] = b.lambda[i] * f_bar[i];
    }
    return b;
}

}  // namespace ddsmc
