#pragma once

#include "ddsmc/plant.hpp"
#include "ddsmc/synthesis.hpp"

namespace ddsmc {

/// Reaching-law parameters. m is the number of sliding variables.
struct SmcParams {
    Matrix N;      // m x n_x
    double q = 0.1;
    double sigma = 0.1;
    Vector rho;    // m, each in (0, 1)

    // The cancelled nominal term acts on x through the m x n_x constant
    // matrix by default; when true it acts on the full lifted vector via
    // N M [G1, G2], which coincides up to the cancellation residual.
    bool cancel_on_basis = false;

    int m() const { return static_cast<int>(N.rows()); }
    void validate(const Matrix& B) const;
};

struct ControllerState {
    Matrix K;        // n_u x n_z
    Matrix A_tilde;  // m x n_x
    Matrix A_tilde_z;  // m x n_z, used when cancel_on_basis is set
    Matrix NB_pinv;  // n_u x m, right inverse of N B
    SmcParams params;

    /// MG2, when given, fills the basis part of the lifted cancellation term.
    static ControllerState from_result(const SynthesisResult& res, const SmcParams& params,
                                       const Matrix& B, const Matrix* MG2 = nullptr);
};

/// s = N x.
Vector sliding_variable(const SmcParams& params, const Vector& x);

struct ReachingGains {
    Vector phi;     // diagonal entries, each in (0, 1]
    Vector varphi;  // rho_i |s_i|
};

ReachingGains reaching_gains(const SmcParams& params, const Vector& s);

struct ControlOutput {
    Vector u;
    Vector u_n;
    Vector u_r;
    Vector s;
};

/// Full control law: u = K Z + (N B)^+ (-A~ x + (1-q) phi s - varphi sgn(s)).
ControlOutput control(const ControllerState& ctrl, const Vector& Z, const Vector& x);

struct OmegaBound {
    Vector lambda;  // max(1/(2-q-rho_i), 1/(q+rho_i))
    Vector radii;   // lambda_i * f_bar_i
};

OmegaBound omega_bound(const SmcParams& params, const Vector& f_bar);

}  // namespace ddsmc
