#include <doctest.h>

#include <cmath>

#include "ddsmc/controller.hpp"

using namespace ddsmc;

namespace {

SmcParams params1(double q = 0.1, double sigma = 0.1, double rho = 0.5) {
    SmcParams p;
    p.N = (Matrix(1, 2) << 1.0, 1.0).finished();
    p.q = q;
    p.sigma = sigma;
    p.rho = Vector::Constant(1, rho);
    return p;
}

ControllerState manual_ctrl(const Matrix& K, const Matrix& A_tilde, double nb_pinv,
                            const SmcParams& p) {
    ControllerState c;
    c.K = K;
    c.A_tilde = A_tilde;
    c.A_tilde_z = Matrix::Zero(1, K.cols());
    c.A_tilde_z.leftCols(2) = A_tilde;
    c.NB_pinv = Matrix::Constant(1, 1, nb_pinv);
    c.params = p;
    return c;
}

}  // namespace

TEST_CASE("sliding variable") {
    const SmcParams p = params1();
    CHECK(sliding_variable(p, (Vector(2) << 0.3, -0.3).finished())[0] == 0.0);
    CHECK(sliding_variable(p, (Vector(2) << 1.0, 2.0).finished())[0] == 3.0);
    SmcParams pi;
    pi.N = Matrix::Identity(2, 2);
    pi.rho = Vector::Constant(2, 0.5);
    const Vector s = sliding_variable(pi, (Vector(2) << 0.7, -0.4).finished());
    CHECK(s[0] == 0.7);
    CHECK(s[1] == -0.4);
    CHECK_THROWS_AS(sliding_variable(p, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("reaching gains") {
    const SmcParams p = params1();
    SUBCASE("zero sliding variable") {
        const auto g = reaching_gains(p, Vector::Zero(1));
        CHECK(g.phi[0] == 1.0);
        CHECK(g.varphi[0] == 0.0);
    }
    SUBCASE("hand-evaluated point") {
        const auto g = reaching_gains(p, Vector::Constant(1, 10.0));
        CHECK(g.phi[0] == doctest::Approx(2.0 / (std::exp(-1.0) + std::exp(1.0))).epsilon(1e-14));
        CHECK(g.phi[0] == doctest::Approx(0.6480542736638854));
        CHECK(g.varphi[0] == 5.0);
    }
    SUBCASE("phi is even and within (0, 1]") {
        for (double s : {-40.0, -3.0, -0.1, 0.05, 2.0, 25.0}) {
            const auto gp = reaching_gains(p, Vector::Constant(1, s));
            const auto gm = reaching_gains(p, Vector::Constant(1, -s));
            CHECK(gp.phi[0] == gm.phi[0]);
            CHECK(gp.phi[0] > 0.0);
            CHECK(gp.phi[0] <= 1.0);
            CHECK(gp.varphi[0] < std::abs(s));  // rho < 1
        }
    }
    SUBCASE("huge arguments saturate without overflow") {
        const auto g = reaching_gains(p, Vector::Constant(1, 1e12));
        CHECK(std::isfinite(g.phi[0]));
        CHECK(g.phi[0] >= 0.0);
        CHECK(g.varphi[0] == 0.5e12);
    }
}

TEST_CASE("control law") {
    SUBCASE("origin gives zero control when the basis vanishes there") {
        const SmcParams p = params1();
        const auto c = manual_ctrl(Matrix::Constant(1, 3, 2.0), Matrix::Zero(1, 2), 10.0, p);
        const auto out = control(c, Vector::Zero(3), Vector::Zero(2));
        CHECK(out.u.cwiseAbs().maxCoeff() == 0.0);
        CHECK(out.u_n.cwiseAbs().maxCoeff() == 0.0);
        CHECK(out.u_r.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("scalar reaching arithmetic") {
        // q = 0.1, rho = 0.5, s = 1, phi ~= 1, A~x = 0, (NB)^+ = c
        const SmcParams p = params1(0.1, 1e-9, 0.5);
        const double cval = 3.0;
        const auto c = manual_ctrl(Matrix::Zero(1, 3), Matrix::Zero(1, 2), cval, p);
        const Vector x = (Vector(2) << 1.0, 0.0).finished();  // s = 1
        const auto out = control(c, Vector::Zero(3), x);
        CHECK(out.s[0] == 1.0);
        CHECK(out.u_r[0] == doctest::Approx(cval * (0.9 - 0.5)).epsilon(1e-12));
    }
    SUBCASE("on the surface only the cancellation term acts") {
        const SmcParams p = params1();
        Matrix At(1, 2);
        At << 0.7, -0.4;
        const auto c = manual_ctrl(Matrix::Zero(1, 3), At, 10.0, p);
        const Vector x = (Vector(2) << 0.5, -0.5).finished();  // s = 0
        const auto out = control(c, Vector::Zero(3), x);
        CHECK(out.u_r[0] == doctest::Approx(-10.0 * (0.7 * 0.5 - 0.4 * -0.5)).epsilon(1e-12));
    }
    SUBCASE("nominal term is additive in K") {
        const SmcParams p = params1();
        Matrix K1 = Matrix::Constant(1, 3, 1.0), dK = Matrix::Constant(1, 3, 0.25);
        const auto c1 = manual_ctrl(K1, Matrix::Zero(1, 2), 10.0, p);
        const auto c2 = manual_ctrl(K1 + dK, Matrix::Zero(1, 2), 10.0, p);
        const Vector Z = (Vector(3) << 0.3, -0.2, 0.05).finished();
        const Vector x = (Vector(2) << 0.3, -0.2).finished();
        const auto o1 = control(c1, Z, x);
        const auto o2 = control(c2, Z, x);
        CHECK((o2.u_n - o1.u_n - dK * Z).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((o2.u_r - o1.u_r).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("dimension mismatch raises") {
        const SmcParams p = params1();
        const auto c = manual_ctrl(Matrix::Zero(1, 3), Matrix::Zero(1, 2), 10.0, p);
        CHECK_THROWS_AS(control(c, Vector::Zero(4), Vector::Zero(2)), std::invalid_argument);
    }
}

TEST_CASE("omega bound") {
    SUBCASE("published parameter point") {
        const auto b = omega_bound(params1(0.1, 0.1, 0.5), Vector::Constant(1, 1.0));
        CHECK(b.lambda[0] == doctest::Approx(1.0 / 0.6).epsilon(1e-14));
    }
    SUBCASE("symmetric point gives lambda = 1") {
        const auto b = omega_bound(params1(0.5, 0.1, 0.5), Vector::Constant(1, 2.0));
        CHECK(b.lambda[0] == 1.0);
        CHECK(b.radii[0] == 2.0);
    }
    SUBCASE("disturbance-free limit") {
        const auto b = omega_bound(params1(), Vector::Zero(1));
        CHECK(b.radii[0] == 0.0);
    }
    CHECK_THROWS_AS(omega_bound(params1(), Vector::Constant(1, -1.0)), std::invalid_argument);
}

TEST_CASE("parameter validation") {
    const Matrix B = (Matrix(2, 1) << 0.0, 0.1).finished();
    CHECK_THROWS_AS(params1(0.0).validate(B), std::invalid_argument);
    CHECK_THROWS_AS(params1(1.0).validate(B), std::invalid_argument);
    CHECK_THROWS_AS(params1(0.1, -1.0).validate(B), std::invalid_argument);
    CHECK_THROWS_AS(params1(0.1, 0.1, 1.0).validate(B), std::invalid_argument);
    CHECK_NOTHROW(params1().validate(B));

    SmcParams bad = params1();
    bad.N = (Matrix(1, 2) << 1.0, 0.0).finished();  // N B = 0
    CHECK_THROWS_AS(bad.validate(B), std::invalid_argument);
}

TEST_CASE("right pseudo-inverse is a right inverse") {
    Matrix M(2, 4);
    M << 1, 2, 0, -1, 0, 1, 3, 0.5;
    const Matrix Mp = right_pseudo_inverse(M);
    CHECK((M * Mp - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(right_pseudo_inverse(Matrix::Zero(2, 3)), std::invalid_argument);
}
