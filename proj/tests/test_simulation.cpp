#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ddsmc/runconfig.hpp"
#include "ddsmc/simulation.hpp"

using namespace ddsmc;

namespace {

struct Setup {
    PlantModel plant;
    DataSet ds;
    SynthesisResult res;
    ControllerState ctrl;
    RunConfig cfg;
};

Setup pendulum_setup(double delta = 0.01, std::uint64_t seed = 1) {
    Setup s{make_pendulum(), {}, {}, {}, RunConfig::defaults_for("pendulum")};
    s.cfg.seed = seed;
    s.cfg.apply_seed();
    s.cfg.disturbance.delta = delta;
    s.ds = collect(s.plant, s.cfg.disturbance, s.cfg.excitation);
    s.res = solve(s.ds, s.plant.B, s.plant.D, s.cfg.synthesis);
    REQUIRE(s.res.feasible());
    SmcParams sp = s.cfg.smc;
    sp.N = s.cfg.synthesis.N;
    s.ctrl = ControllerState::from_result(s.res, sp, s.plant.B);
    return s;
}

SimSpec spec_for(const Setup& s, int steps = 120) {
    SimSpec spec;
    spec.model = s.plant;
    spec.controller = s.ctrl;
    spec.dist = s.cfg.disturbance;
    spec.x0 = (Vector(2) << 1.0, 0.0).finished();
    spec.steps = steps;
    spec.P = s.res.P;
    return spec;
}

}  // namespace

TEST_CASE("trace shape and determinism") {
    const Setup s = pendulum_setup();
    const SimSpec spec = spec_for(s);
    const SimTrace a = run(spec);
    const SimTrace b = run(spec);
    CHECK(a.x.cols() == 121);
    CHECK(a.u.cols() == 120);
    CHECK(a.s.cols() == 121);
    CHECK(a.V.size() == 121);
    CHECK(a.x == b.x);  // bit identical
    CHECK(a.u == b.u);
    CHECK(a.w == b.w);
    CHECK(a.V == b.V);
    // u = u_n + u_r (up to the rounding of the stored sum)
    CHECK((a.u - a.u_n - a.u_r).cwiseAbs().maxCoeff() < 1e-14);
    // V(k) = x P^{-1} x > 0 away from the origin
    CHECK(a.V[0] > 0.0);
}

TEST_CASE("steps must be positive and x0 sized") {
    const Setup s = pendulum_setup();
    SimSpec spec = spec_for(s, 0);
    CHECK_THROWS_AS(run(spec), std::invalid_argument);
    spec.steps = 10;
    spec.x0 = Vector::Zero(3);
    CHECK_THROWS_AS(run(spec), std::invalid_argument);
}

TEST_CASE("open loop equals a zero controller") {
    const Setup s = pendulum_setup();
    SimSpec spec = spec_for(s, 150);

    SimSpec open = spec;
    open.mode = ControlMode::OpenLoop;
    open.controller.reset();
    const SimTrace to = run(open, false);

    SimSpec zero = spec;
    zero.mode = ControlMode::NominalOnly;
    ControllerState zc = s.ctrl;
    zc.K = Matrix::Zero(1, 3);
    zero.controller = zc;
    const SimTrace tz = run(zero, false);

    REQUIRE(to.x.cols() == tz.x.cols());
    CHECK((to.x - tz.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tz.u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergence is thrown or recorded") {
    PlantModel unstable = make_pendulum();
    unstable.A_x << 3.0, 0.0, 0.0, 3.0;
    SimSpec spec;
    spec.model = unstable;
    spec.mode = ControlMode::OpenLoop;
    spec.dist = {0.0, 1};
    spec.x0 = (Vector(2) << 1.0, 0.0).finished();
    spec.steps = 100;
    CHECK_THROWS_AS(run(spec), DivergenceError);
    const SimTrace tr = run(spec, false);
    CHECK(tr.diverged);
    CHECK(tr.divergence_step > 5);
    CHECK(tr.divergence_step < 20);
    CHECK(tr.x.cols() == tr.divergence_step + 2);
}

TEST_CASE("reaching report on a healthy run") {
    const Setup s = pendulum_setup();
    SimSpec spec = spec_for(s, 300);
    SimTrace tr = run(spec);
    const ReachingReport rep = check_reaching(tr, s.plant, s.ctrl, s.ds, s.res);
    CHECK(rep.violations_9a == 0);
    CHECK(rep.violations_9b == 0);
    CHECK(rep.checked_outside > 0);
    CHECK(rep.first_entry >= 0);
    CHECK(rep.residence >= 0.95);
    CHECK(rep.lambda[0] == doctest::Approx(1.0 / 0.6));
    CHECK(tr.in_omega.size() == 301);
    CHECK(tr.cond9a.size() == 300);
    // flags: after first entry the trajectory mostly stays inside
    int inside = 0;
    for (size_t k = rep.first_entry; k < tr.in_omega.size(); ++k) inside += tr.in_omega[k];
    CHECK(inside >= static_cast<int>(0.95 * (tr.in_omega.size() - rep.first_entry)));
}

TEST_CASE("reaching condition arithmetic on crafted sequences") {
    // s: 1.0 -> 0.5 satisfies both inequalities; 1.0 -> 1.2 violates (9a)
    const Setup s = pendulum_setup();
    SimTrace tr;
    tr.x.resize(2, 3);
    // N = [1, 1]: states with x2 = 0 give s = x1
    tr.x << 1.0, 0.5, 1.2, 0.0, 0.0, 0.0;
    tr.s.resize(1, 3);
    tr.s << 1.0, 0.5, 1.2;
    tr.u = tr.u_n = tr.u_r = Matrix::Zero(1, 2);
    tr.w = Matrix::Zero(1, 2);
    tr.V = Vector::Zero(3);
    DataSet ds0 = s.ds;
    ds0.W0_oracle = Matrix::Zero(1, ds0.T);  // f == 0, radii == 0
    SimTrace tr2 = tr;
    const ReachingReport rep = check_reaching(tr2, s.plant, s.ctrl, ds0, s.res);
    CHECK(rep.radii[0] == 0.0);
    CHECK(rep.violations_9a == 1);  // only the 1.0 -> 1.2 transition
    CHECK(rep.violations_9b == 0);
    CHECK(tr2.cond9a[0]);
    CHECK(tr2.cond9b[0]);
    CHECK_FALSE(tr2.cond9a[1]);
}

TEST_CASE("lyapunov decrease in and out of the noise-free limit") {
    SUBCASE("noise-free nominal run decreases strictly") {
        const Setup s = pendulum_setup(0.0, 2);
        SimSpec spec = spec_for(s, 200);
        spec.mode = ControlMode::NominalOnly;
        const SimTrace tr = run(spec);
        const LyapunovReport rep = check_lyapunov(tr, s.plant, s.ctrl, s.ds, s.res);
        CHECK(rep.fraction == 1.0);
        for (int k = 0; k + 1 < 50; ++k) CHECK(tr.V[k + 1] < tr.V[k]);
    }
    SUBCASE("disturbed smc run satisfies the inequality almost always") {
        const Setup s = pendulum_setup(0.01, 3);
        SimSpec spec = spec_for(s, 300);
        const SimTrace tr = run(spec);
        const LyapunovReport rep = check_lyapunov(tr, s.plant, s.ctrl, s.ds, s.res);
        CHECK(rep.checked == 300);
        CHECK(rep.fraction >= 0.99);
    }
}

TEST_CASE("band residence stays high over long horizons") {
    const Setup s = pendulum_setup(0.1, 2);
    SimSpec spec = spec_for(s, 600);
    SimTrace tr = run(spec, false);
    REQUIRE_FALSE(tr.diverged);
    const ReachingReport rep = check_reaching(tr, s.plant, s.ctrl, s.ds, s.res);
    CHECK(rep.first_entry >= 0);
    CHECK(rep.residence >= 0.95);
}

TEST_CASE("lifted cancellation switch matches the state form") {
    // with the cancellation equations satisfied, A~ Z(x) and A~ x coincide
    const Setup s = pendulum_setup(0.01, 5);
    const Matrix MG2 = s.ds.X1 * s.res.G2;
    SmcParams alt = s.ctrl.params;
    alt.cancel_on_basis = true;
    const ControllerState lifted =
        ControllerState::from_result(s.res, alt, s.plant.B, &MG2);
    CounterRng rng(17);
    for (int i = 0; i < 30; ++i) {
        Vector x(2);
        x << rng.uniform(0, 2 * i, -3, 3), rng.uniform(0, 2 * i + 1, -3, 3);
        const Vector Z = eval_basis(s.plant, x);
        const auto a = control(s.ctrl, Z, x);
        const auto b = control(lifted, Z, x);
        CHECK((a.u - b.u).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("a-priori reaching surrogate dominates delta alone") {
    const Setup s = pendulum_setup(0.1, 1);
    const Matrix G =
        (Matrix(30, 3) << s.res.G1, s.res.G2).finished();
    SmcParams sp = s.ctrl.params;
    const Vector fb = apriori_reaching_bound(s.plant, sp, G, 0.1, 30,
                                             Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
    CHECK(fb.size() == 1);
    CHECK(fb[0] > 0.1 * 0.1);  // |N D| delta alone
}

TEST_CASE("sweep grid aggregates statuses deterministically") {
    const PlantModel plant = make_pendulum();
    RunConfig cfg = RunConfig::defaults_for("pendulum");
    SweepOptions so;
    so.sim_x0 = (Vector(2) << 1.0, 0.0).finished();
    so.sim_steps = 60;
    const std::vector<double> grid{0.0, 0.01};
    const std::vector<std::uint64_t> seeds{1, 2};
    const auto cells = sweep_delta(plant, cfg.excitation, cfg.synthesis, cfg.smc, grid, seeds, so);
    REQUIRE(cells.size() == 4);
    for (const auto& c : cells) CHECK(c.status == SdpStatus::Feasible);
    CHECK(cells[0].delta == 0.0);
    CHECK(cells[3].delta == 0.01);
    CHECK(cells[3].seed == 2);

    SweepOptions so2 = so;
    so2.jobs = 2;
    const auto cells2 =
        sweep_delta(plant, cfg.excitation, cfg.synthesis, cfg.smc, grid, seeds, so2);
    for (size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells2[i].gamma == cells[i].gamma);  // threading must not change results
        CHECK(cells2[i].converged == cells[i].converged);
    }
    CHECK_THROWS_AS(sweep_delta(plant, cfg.excitation, cfg.synthesis, cfg.smc, {}, seeds, so),
                    std::invalid_argument);
}

TEST_CASE("trace file carries the documented columns") {
    const Setup s = pendulum_setup();
    SimSpec spec = spec_for(s, 40);
    SimTrace tr = run(spec);
    check_reaching(tr, s.plant, s.ctrl, s.ds, s.res);
    const auto path = (std::filesystem::temp_directory_path() / "ddsmc_trace.csv").string();
    save_trace(tr, path, {"test"});
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    CHECK(line == "# test");
    std::getline(is, line);
    CHECK(line == "k,x_1,x_2,u_1,s_1,w_1,V,in_omega,cond9a,cond9b,un_1,ur_1");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 41);
    std::remove(path.c_str());
}

TEST_CASE("convergence indicator checks the whole tail") {
    SimTrace tr;
    tr.x = Matrix::Zero(2, 100);
    CHECK(trace_converged(tr, 0.05, 0.2));
    tr.x(0, 95) = 0.06;  // one late excursion breaks it
    CHECK_FALSE(trace_converged(tr, 0.05, 0.2));
    tr.x(0, 95) = 0.0;
    tr.x(0, 10) = 5.0;  // early transient is fine
    CHECK(trace_converged(tr, 0.05, 0.2));
    tr.diverged = true;
    CHECK_FALSE(trace_converged(tr, 0.05, 0.2));
}
