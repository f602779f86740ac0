#include "ddsmc/simulation.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "ddsmc/csv.hpp"

namespace ddsmc {

SimTrace run(const SimSpec& spec, bool throw_on_divergence) {
    if (spec.steps < 1) throw std::invalid_argument("simulation needs steps >= 1");
    if (spec.mode != ControlMode::OpenLoop && !spec.controller)
        throw std::invalid_argument("closed-loop simulation needs a controller");
    const auto& model = spec.model;
    if (spec.x0.size() != model.n_x()) throw std::invalid_argument("x0 dimension mismatch");
    const int nx = model.n_x(), nu = model.n_u(), nw = model.n_w();
    const int m = spec.controller ? spec.controller->params.m() : 0;

    SimTrace tr;
    tr.x.resize(nx, spec.steps + 1);
    tr.u.resize(nu, spec.steps);
    tr.u_n.resize(nu, spec.steps);
    tr.u_r.resize(nu, spec.steps);
    tr.s.resize(m, spec.steps + 1);
    tr.w.resize(nw, spec.steps);
    tr.V.setZero(spec.steps + 1);

    std::optional<Eigen::LDLT<Matrix>> pfac;
    if (spec.P) pfac.emplace(*spec.P);
    auto lyap = [&](const Vector& x) {
        return pfac ? x.dot(pfac->solve(x)) : 0.0;
    };

    Vector x = spec.x0;
    tr.x.col(0) = x;
    if (m) tr.s.col(0) = spec.controller->params.N * x;
    tr.V[0] = lyap(x);
    for (int k = 0; k < spec.steps; ++k) {
        Vector u = Vector::Zero(nu), un = Vector::Zero(nu), ur = Vector::Zero(nu);
        if (spec.mode != ControlMode::OpenLoop) {
            const Vector Z = eval_basis(model, x);
            if (spec.mode == ControlMode::FullSmc) {
                const ControlOutput out = control(*spec.controller, Z, x);
                u = out.u;
                un = out.u_n;
                ur = out.u_r;
            } else {
                un = spec.controller->K * Z;
                u = un;
            }
        }
        const Vector w = spec.dist.sample(nw, streams::kSimDisturbance, k);
        x = step(model, x, u, w);
        tr.u.col(k) = u;
        tr.u_n.col(k) = un;
        tr.u_r.col(k) = ur;
        tr.w.col(k) = w;
        tr.x.col(k + 1) = x;
        if (m) tr.s.col(k + 1) = spec.controller->params.N * x;
        tr.V[k + 1] = lyap(x);
        if (x.cwiseAbs().maxCoeff() > spec.blowup_bound) {
            tr.diverged = true;
            tr.divergence_step = k;
            if (throw_on_divergence)
                throw DivergenceError("state exceeded blow-up bound at step " + std::to_string(k),
                                      k);
            const int kept = k + 2;
            tr.x.conservativeResize(nx, kept);
            tr.u.conservativeResize(nu, kept - 1);
            tr.u_n.conservativeResize(nu, kept - 1);
            tr.u_r.conservativeResize(nu, kept - 1);
            tr.s.conservativeResize(m, kept);
            tr.w.conservativeResize(nw, kept - 1);
            tr.V.conservativeResize(kept);
            break;
        }
    }
    return tr;
}

ReachingReport check_reaching(SimTrace& tr, const PlantModel& model, const ControllerState& ctrl,
                              const DataSet& ds, const SynthesisResult& res) {
    if (!ds.W0_oracle) throw std::invalid_argument("check_reaching needs the disturbance record");
    const auto& p = ctrl.params;
    const int m = p.m();
    const int steps = tr.steps();
    const Matrix G =
        (Matrix(res.G1.rows(), res.G1.cols() + res.G2.cols()) << res.G1, res.G2).finished();
    const Matrix ND = p.N * model.D;

    // observed bound on f(k) = N D (d(k) + w(k)), d(k) = -W0 G Z(x(k))
    Matrix f(m, steps);
    for (int k = 0; k < steps; ++k) {
        const Vector Z = eval_basis(model, tr.x.col(k));
        const Vector d = -(*ds.W0_oracle) * (G * Z);
        f.col(k) = ND * (d + Vector(tr.w.col(k)));
    }
    ReachingReport rep;
    rep.f_bar_obs = f.cwiseAbs().rowwise().maxCoeff();
    const OmegaBound ob = omega_bound(p, rep.f_bar_obs);
    rep.lambda = ob.lambda;
    rep.radii = ob.radii;

    tr.in_omega.assign(steps + 1, false);
    tr.cond9a.assign(steps, false);
    tr.cond9b.assign(steps, false);
    int first = -1;
    int inside_after = 0, total_after = 0;
    for (int k = 0; k <= steps; ++k) {
        bool inside = true;
        for (int i = 0; i < m; ++i)
            if (std::abs(tr.s(i, k)) > rep.radii[i]) inside = false;
        tr.in_omega[k] = inside;
        if (inside && first < 0) first = k;
        if (first >= 0 && k >= first) {
            ++total_after;
            if (inside) ++inside_after;
        }
    }
    rep.first_entry = first;
    rep.residence = total_after ? static_cast<double>(inside_after) / total_after : 0.0;

    for (int k = 0; k < steps; ++k) {
        bool a_ok = true, b_ok = true;
        for (int i = 0; i < m; ++i) {
            const double si = tr.s(i, k), sn = tr.s(i, k + 1);
            const double sg = sgn(si);
            if (sg == 0.0) continue;  // conditions vacuous on the surface
            if (!((sn - si) * sg < 0.0)) a_ok = false;
            if (!((sn + si) * sg > 0.0)) b_ok = false;
            if (std::abs(si) > rep.radii[i]) {
                ++rep.checked_outside;
                if (!((sn - si) * sg < 0.0)) ++rep.violations_9a;
                if (!((sn + si) * sg > 0.0)) ++rep.violations_9b;
            }
        }
        tr.cond9a[k] = a_ok;
        tr.cond9b[k] = b_ok;
    }
    return rep;
}

Vector apriori_reaching_bound(const PlantModel& model, const SmcParams& params, const Matrix& G,
                              double delta, int T, const Vector& box_lo, const Vector& box_hi,
                              int samples, std::uint64_t seed) {
    const Matrix NDabs = (params.N * model.D).cwiseAbs();
    CounterRng rng(seed);
    double env = 0.0;
    const int nx = model.n_x();
    for (int s = 0; s < samples; ++s) {
        Vector x(nx);
        for (int i = 0; i < nx; ++i)
            x[i] = rng.uniform(0, static_cast<std::uint64_t>(s) * nx + i, box_lo[i], box_hi[i]);
        env = std::max(env, (G * eval_basis(model, x)).norm());
    }
    const double per_channel = delta + delta * std::sqrt(static_cast<double>(T)) * env;
    return NDabs * Vector::Constant(model.n_w(), per_channel);
}

LyapunovReport check_lyapunov(const SimTrace& tr, const PlantModel& model,
                              const ControllerState& ctrl, const DataSet& ds,
                              const SynthesisResult& res) {
    if (!ds.W0_oracle) throw std::invalid_argument("check_lyapunov needs the disturbance record");
    LyapunovReport rep;
    Eigen::LDLT<Matrix> pfac(res.P);
    const int nx = model.n_x();
    const Matrix NBp = right_pseudo_inverse(ctrl.params.N * model.B);
    const Matrix PhiD =
        (Matrix::Identity(nx, nx) - model.B * NBp * ctrl.params.N) * model.D;
    for (int k = 0; k < tr.steps(); ++k) {
        const Vector x = tr.x.col(k);
        if (x.cwiseAbs().maxCoeff() == 0.0) continue;  // all terms vanish there
        const Vector wbar =
            Vector(tr.w.col(k)) - (*ds.W0_oracle) * (res.G2 * model.basis.eval(x));
        const Vector xn = res.A_hat * x + PhiD * wbar;
        const double V1 = xn.dot(pfac.solve(xn));
        const double V0 = x.dot(pfac.solve(x));
        const double lhs =
            V1 - V0 + x.squaredNorm() / res.gamma - res.gamma * wbar.squaredNorm();
        ++rep.checked;
        if (lhs < 0.0)
            ++rep.holds;
        else
            rep.worst_violation = std::max(rep.worst_violation, lhs);
    }
    rep.fraction = rep.checked ? static_cast<double>(rep.holds) / rep.checked : 1.0;
    return rep;
}

bool trace_converged(const SimTrace& tr, double threshold, double tail_fraction) {
    if (tr.diverged) return false;
    const int total = static_cast<int>(tr.x.cols());
    const int start = total - std::max(1, static_cast<int>(std::floor(total * tail_fraction)));
    for (int k = start; k < total; ++k)
        if (tr.x.col(k).cwiseAbs().maxCoeff() > threshold) return false;
    return true;
}

std::vector<SweepCell> sweep_delta(const PlantModel& model, const ExcitationSpec& exc,
                                   const SynthesisConfig& cfg, const SmcParams& smc,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<std::uint64_t>& seeds,
                                   const SweepOptions& opts) {
    if (delta_grid.empty()) throw std::invalid_argument("sweep needs a nonempty delta grid");
    std::vector<SweepCell> cells(delta_grid.size() * seeds.size());
    auto work = [&](size_t idx) {
        const double delta = delta_grid[idx / seeds.size()];
        const std::uint64_t seed = seeds[idx % seeds.size()];
        SweepCell cell;
        cell.delta = delta;
        cell.seed = seed;
        try {
            ExcitationSpec e = exc;
            e.seed = seed;
            DisturbanceSpec dist{delta, seed};
            const DataSet ds = collect(model, dist, e);
            const SynthesisResult res = solve(ds, model.B, model.D, cfg);
            cell.status = res.status;
            if (res.feasible()) {
                cell.gamma = res.gamma;
                if (opts.simulate) {
                    SimSpec spec;
                    spec.model = model;
                    spec.controller = ControllerState::from_result(res, smc, model.B);
                    spec.dist = dist;
                    spec.x0 = opts.sim_x0;
                    spec.steps = opts.sim_steps;
                    const SimTrace tr = run(spec, false);
                    cell.diverged = tr.diverged;
                    cell.converged =
                        trace_converged(tr, opts.convergence_threshold, opts.convergence_fraction);
                }
            }
        } catch (const CollectionError&) {
            cell.status = SdpStatus::SolverError;
            cell.diverged = true;
        } catch (const std::exception&) {
            cell.status = SdpStatus::SolverError;
        }
        cells[idx] = cell;
    };
    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < cells.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) work(i);
            });
        for (auto& t : pool) t.join();
    }
    return cells;
}

void save_trace(const SimTrace& tr, const std::string& path,
                const std::vector<std::string>& header_comments) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& c : header_comments) os << "# " << c << "\n";
    const int nx = static_cast<int>(tr.x.rows());
    const int nu = static_cast<int>(tr.u.rows());
    const int m = static_cast<int>(tr.s.rows());
    const int nw = static_cast<int>(tr.w.rows());
    os << "k";
    for (int i = 1; i <= nx; ++i) os << ",x_" << i;
    for (int i = 1; i <= nu; ++i) os << ",u_" << i;
    for (int i = 1; i <= m; ++i) os << ",s_" << i;
    for (int i = 1; i <= nw; ++i) os << ",w_" << i;
    os << ",V,in_omega,cond9a,cond9b";
    for (int i = 1; i <= nu; ++i) os << ",un_" << i;
    for (int i = 1; i <= nu; ++i) os << ",ur_" << i;
    os << "\n";
    const int total = static_cast<int>(tr.x.cols());
    for (int k = 0; k < total; ++k) {
        const bool has_step = k < tr.steps();
        os << k;
        for (int i = 0; i < nx; ++i) os << "," << csv::format_double(tr.x(i, k));
        for (int i = 0; i < nu; ++i) os << "," << (has_step ? csv::format_double(tr.u(i, k)) : "");
        for (int i = 0; i < m; ++i) os << "," << csv::format_double(tr.s(i, k));
        for (int i = 0; i < nw; ++i) os << "," << (has_step ? csv::format_double(tr.w(i, k)) : "");
        os << "," << csv::format_double(tr.V[k]);
        os << "," << (tr.in_omega.empty() ? "" : (tr.in_omega[k] ? "1" : "0"));
        os << "," << (has_step && !tr.cond9a.empty() ? (tr.cond9a[k] ? "1" : "0") : "");
        os << "," << (has_step && !tr.cond9b.empty() ? (tr.cond9b[k] ? "1" : "0") : "");
        for (int i = 0; i < nu; ++i)
            os << "," << (has_step ? csv::format_double(tr.u_n(i, k)) : "");
        for (int i = 0; i < nu; ++i)
            os << "," << (has_step ? csv::format_double(tr.u_r(i, k)) : "");
        os << "\n";
    }
}

void save_sweep(const std::vector<SweepCell>& cells, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "delta,seed,status,gamma,converged\n";
    for (const auto& c : cells) {
        os << csv::format_double(c.delta) << "," << c.seed << "," << to_string(c.status) << ","
           << (c.status == SdpStatus::Feasible ? csv::format_double(c.gamma) : "") << ","
           << (c.status == SdpStatus::Feasible ? (c.converged ? "1" : "0") : "") << "\n";
    }
}

}  // namespace ddsmc
