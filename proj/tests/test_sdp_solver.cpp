#include <doctest.h>

#include "ddsmc/sdp.hpp"

using namespace ddsmc;

TEST_CASE("scalar bound: min x with x - 1 >= 0") {
    SdpProblem p(1);
    p.c[0] = 1.0;
    SdpBlock& b = p.add_block(1);
    b.add_coeff(0, 0, 0, 1.0);
    b.add_const(0, 0, -1.0);
    const auto sol = BarrierSolver().solve(p, {});
    REQUIRE(sol.status == SdpStatus::Feasible);
    CHECK(sol.theta[0] > 1.0);
    CHECK(sol.objective_bound == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("2x2 psd completion: min t with [[t, 1], [1, t]] psd") {
    SdpProblem p(1);
    p.c[0] = 1.0;
    SdpBlock& b = p.add_block(2);
    b.add_coeff(0, 0, 0, 1.0);
    b.add_coeff(0, 1, 1, 1.0);
    b.add_const(0, 1, 1.0);
    const auto sol = BarrierSolver().solve(p, {});
    REQUIRE(sol.status == SdpStatus::Feasible);
    CHECK(sol.objective_bound == doctest::Approx(1.0).epsilon(0.05));
    CHECK(sol.theta[0] >= 1.0);
}

TEST_CASE("equalities are enforced exactly") {
    // min x + y  s.t.  x + y = 2, x >= 0, y >= 0
    SdpProblem p(2);
    p.c << 1.0, 1.0;
    p.add_eq({{0, 1.0}, {1, 1.0}}, 2.0);
    SdpBlock& bx = p.add_block(1);
    bx.add_coeff(0, 0, 0, 1.0);
    SdpBlock& by = p.add_block(1);
    by.add_coeff(1, 0, 0, 1.0);
    const auto sol = BarrierSolver().solve(p, {});
    REQUIRE(sol.status == SdpStatus::Feasible);
    CHECK(sol.theta[0] + sol.theta[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.theta[0] > 0.0);
    CHECK(sol.theta[1] > 0.0);
}

TEST_CASE("infeasible cone is reported") {
    SdpProblem p(1);
    SdpBlock& b = p.add_block(2);
    // [[x - 1, 2], [2, -x - 1]] can never be psd: trace = -2
    b.add_coeff(0, 0, 0, 1.0);
    b.add_coeff(0, 1, 1, -1.0);
    b.add_const(0, 0, -1.0);
    b.add_const(1, 1, -1.0);
    b.add_const(0, 1, 2.0);
    const auto sol = BarrierSolver().solve(p, {});
    CHECK(sol.status == SdpStatus::Infeasible);
    CHECK(sol.phase1_margin > 0.0);
}

TEST_CASE("inconsistent equalities are reported") {
    SdpProblem p(1);
    p.add_eq({{0, 1.0}}, 1.0);
    p.add_eq({{0, 1.0}}, 2.0);
    p.add_block(1).add_coeff(0, 0, 0, 1.0);
    const auto sol = BarrierSolver().solve(p, {});
    CHECK(sol.status == SdpStatus::InfeasibleEqualities);
}

TEST_CASE("recentering keeps the pinned objective and feasibility") {
    SdpProblem p(2);
    p.c << 1.0, 0.0;
    // x >= 1, y in [-3, 3] via two scalar blocks, objective min x
    SdpBlock& bx = p.add_block(1);
    bx.add_coeff(0, 0, 0, 1.0);
    bx.add_const(0, 0, -1.0);
    SdpBlock& hi = p.add_block(1);
    hi.add_coeff(1, 0, 0, -1.0);
    hi.add_const(0, 0, 3.0);
    SdpBlock& lo = p.add_block(1);
    lo.add_coeff(1, 0, 0, 1.0);
    lo.add_const(0, 0, 3.0);
    SdpOptions opts;
    opts.recenter_slack = 0.5;
    const auto sol = BarrierSolver().solve(p, opts);
    REQUIRE(sol.status == SdpStatus::Feasible);
    // returned point sits on the slice x = 1.5 * optimum, centered in y
    CHECK(sol.objective == doctest::Approx(1.5).epsilon(0.1));
    CHECK(std::abs(sol.theta[1]) < 0.2);
    CHECK(sol.objective_bound == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("feasibility mode returns an interior point") {
    SdpProblem p(1);  // no objective
    SdpBlock& b = p.add_block(2);
    b.add_coeff(0, 0, 0, 1.0);
    b.add_coeff(0, 1, 1, 1.0);
    b.add_const(0, 1, 1.0);  // [[x, 1], [1, x]]: interior needs x > 1
    const auto sol = BarrierSolver().solve(p, {});
    REQUIRE(sol.status == SdpStatus::Feasible);
    CHECK(sol.theta[0] > 1.0);
}

TEST_CASE("solver registry") {
    CHECK(make_solver("barrier")->name() == "barrier");
    CHECK_THROWS_AS(make_solver("simplex"), std::invalid_argument);
    CHECK(default_solver_name() == "barrier");
}
