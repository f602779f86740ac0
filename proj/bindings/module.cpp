#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ddsmc/runconfig.hpp"

namespace py = pybind11;
using namespace ddsmc;

PYBIND11_MODULE(_core, m) {
    m.doc() = "data-driven sliding mode control toolkit";

    py::class_<NonlinearBasis>(m, "NonlinearBasis")
        .def_readonly("name", &NonlinearBasis::name)
        .def_property_readonly("n_q", &NonlinearBasis::n_q)
        .def("eval", &NonlinearBasis::eval);

    py::class_<PlantModel>(m, "PlantModel")
        .def_readwrite("A_x", &PlantModel::A_x)
        .def_readwrite("A_q", &PlantModel::A_q)
        .def_readwrite("B", &PlantModel::B)
        .def_readwrite("D", &PlantModel::D)
        .def_readwrite("t_s", &PlantModel::t_s)
        .def_readonly("basis", &PlantModel::basis)
        .def_property_readonly("n_x", &PlantModel::n_x)
        .def_property_readonly("n_u", &PlantModel::n_u)
        .def_property_readonly("n_w", &PlantModel::n_w)
        .def_property_readonly("n_z", &PlantModel::n_z);

    m.def("make_pendulum", &make_pendulum);
    m.def("make_cart_spring", &make_cart_spring);
    m.def("eval_basis", &eval_basis, py::arg("model"), py::arg("x"));
    m.def("step", &step, py::arg("model"), py::arg("x"), py::arg("u"), py::arg("w"));
    m.def("load_plant", &load_plant);
    m.def("save_plant", &save_plant);

    py::class_<DisturbanceSpec>(m, "DisturbanceSpec")
        .def(py::init([](double delta, std::uint64_t seed) {
                 return DisturbanceSpec{delta, seed};
             }),
             py::arg("delta"), py::arg("seed") = 0)
        .def_readwrite("delta", &DisturbanceSpec::delta)
        .def_readwrite("seed", &DisturbanceSpec::seed);

    py::class_<ExcitationSpec>(m, "ExcitationSpec")
        .def(py::init([](int T, const Vector& lo, const Vector& hi, std::uint64_t seed) {
                 ExcitationSpec e;
                 e.T = T;
                 e.input_lo = lo;
                 e.input_hi = hi;
                 e.seed = seed;
                 return e;
             }),
             py::arg("T"), py::arg("input_lo"), py::arg("input_hi"), py::arg("seed") = 0)
        .def_readwrite("T", &ExcitationSpec::T)
        .def_readwrite("input_lo", &ExcitationSpec::input_lo)
        .def_readwrite("input_hi", &ExcitationSpec::input_hi)
        .def_readwrite("x0", &ExcitationSpec::x0)
        .def_readwrite("seed", &ExcitationSpec::seed)
        .def_readwrite("restart", &ExcitationSpec::restart);

    py::class_<DataSet>(m, "DataSet")
        .def_readonly("U0", &DataSet::U0)
        .def_readonly("X0", &DataSet::X0)
        .def_readonly("X1", &DataSet::X1)
        .def_readonly("Z0", &DataSet::Z0)
        .def_readonly("W0_oracle", &DataSet::W0_oracle)
        .def_readonly("delta", &DataSet::delta)
        .def_readonly("T", &DataSet::T);

    m.def("collect", &collect, py::arg("model"), py::arg("dist"), py::arg("exc"));
    m.def("save_dataset", &save_dataset);
    m.def("load_dataset", &load_dataset);

    py::class_<RichnessReport>(m, "RichnessReport")
        .def_readonly("rank", &RichnessReport::rank)
        .def_readonly("smallest_sv", &RichnessReport::smallest_sv)
        .def_readonly("rich", &RichnessReport::rich);
    m.def("richness_check", &richness_check, py::arg("ds"), py::arg("tol") = 1e-8);

    py::class_<SynthesisConfig>(m, "SynthesisConfig")
        .def(py::init([](const Matrix& N) {
            SynthesisConfig c;
            c.N = N;
            return c;
        }))
        .def_readwrite("eps1", &SynthesisConfig::eps1)
        .def_readwrite("eps2", &SynthesisConfig::eps2)
        .def_readwrite("strictness_margin", &SynthesisConfig::strictness_margin)
        .def_readwrite("solver_tol", &SynthesisConfig::solver_tol)
        .def_readwrite("N", &SynthesisConfig::N)
        .def_readwrite("optimize_gamma", &SynthesisConfig::optimize_gamma)
        .def_readwrite("gamma_slack", &SynthesisConfig::gamma_slack)
        .def_readwrite("solver_name", &SynthesisConfig::solver_name);

    py::class_<SynthesisResult>(m, "SynthesisResult")
        .def_property_readonly("status",
                               [](const SynthesisResult& r) { return to_string(r.status); })
        .def_readonly("message", &SynthesisResult::message)
        .def_readonly("P", &SynthesisResult::P)
        .def_readonly("Y", &SynthesisResult::Y)
        .def_readonly("G2", &SynthesisResult::G2)
        .def_readonly("G1", &SynthesisResult::G1)
        .def_readonly("K", &SynthesisResult::K)
        .def_readonly("A_tilde", &SynthesisResult::A_tilde)
        .def_readonly("A_hat", &SynthesisResult::A_hat)
        .def_readonly("gamma", &SynthesisResult::gamma)
        .def_readonly("gamma_opt", &SynthesisResult::gamma_opt)
        .def_readonly("residuals", &SynthesisResult::residuals)
        .def_property_readonly("feasible", &SynthesisResult::feasible);

    m.def("solve", &solve, py::arg("ds"), py::arg("B"), py::arg("D"), py::arg("cfg"),
          py::call_guard<py::gil_scoped_release>());
    m.def("save_result", &save_result);
    m.def("load_result", &load_result);

    py::class_<VerificationReport>(m, "VerificationReport")
        .def_readonly("factorization_rel", &VerificationReport::factorization_rel)
        .def_readonly("cancellation_abs", &VerificationReport::cancellation_abs)
        .def_readonly("cancellation_rel", &VerificationReport::cancellation_rel)
        .def_readonly("lmi_min_eig", &VerificationReport::lmi_min_eig)
        .def_readonly("P_min_eig", &VerificationReport::P_min_eig)
        .def_readonly("identity_residual", &VerificationReport::identity_residual);
    m.def(
        "verify_result",
        [](const DataSet& ds, const Matrix& B, const Matrix& D, const SynthesisConfig& cfg,
           const SynthesisResult& res, const PlantModel* plant, int samples, std::uint64_t seed) {
            return verify_result(ds, B, D, cfg, res, plant, samples, seed);
        },
        py::arg("ds"), py::arg("B"), py::arg("D"), py::arg("cfg"), py::arg("res"),
        py::arg("oracle_plant") = nullptr, py::arg("oracle_samples") = 100,
        py::arg("oracle_seed") = 0);

    py::class_<NominalStabilityReport>(m, "NominalStabilityReport")
        .def_readonly("A_hat", &NominalStabilityReport::A_hat)
        .def_readonly("spectral_radius", &NominalStabilityReport::spectral_radius)
        .def_readonly("lyapunov_ok", &NominalStabilityReport::lyapunov_ok);
    m.def("nominal_stability_check", &nominal_stability_check);

    py::class_<SmcParams>(m, "SmcParams")
        .def(py::init([](const Matrix& N, double q, double sigma, const Vector& rho) {
                 SmcParams p;
                 p.N = N;
                 p.q = q;
                 p.sigma = sigma;
                 p.rho = rho;
                 return p;
             }),
             py::arg("N"), py::arg("q") = 0.1, py::arg("sigma") = 0.1,
             py::arg("rho") = Vector::Constant(1, 0.5))
        .def_readwrite("N", &SmcParams::N)
        .def_readwrite("q", &SmcParams::q)
        .def_readwrite("sigma", &SmcParams::sigma)
        .def_readwrite("rho", &SmcParams::rho)
        .def_readwrite("cancel_on_basis", &SmcParams::cancel_on_basis);

    py::class_<ControllerState>(m, "ControllerState")
        .def_static("from_result",
                    [](const SynthesisResult& res, const SmcParams& p, const Matrix& B) {
                        return ControllerState::from_result(res, p, B);
                    })
        .def_readonly("K", &ControllerState::K)
        .def_readonly("A_tilde", &ControllerState::A_tilde)
        .def_readonly("NB_pinv", &ControllerState::NB_pinv);

    m.def("sliding_variable", &sliding_variable);
    py::class_<ReachingGains>(m, "ReachingGains")
        .def_readonly("phi", &ReachingGains::phi)
        .def_readonly("varphi", &ReachingGains::varphi);
    m.def("reaching_gains", &reaching_gains);
    py::class_<ControlOutput>(m, "ControlOutput")
        .def_readonly("u", &ControlOutput::u)
        .def_readonly("u_n", &ControlOutput::u_n)
        .def_readonly("u_r", &ControlOutput::u_r)
        .def_readonly("s", &ControlOutput::s);
    m.def("control", &control, py::arg("ctrl"), py::arg("Z"), py::arg("x"));
    py::class_<OmegaBound>(m, "OmegaBound")
        .def_readonly("lambda_", &OmegaBound::lambda)
        .def_readonly("radii", &OmegaBound::radii);
    m.def("omega_bound", &omega_bound);

    py::enum_<ControlMode>(m, "ControlMode")
        .value("FullSmc", ControlMode::FullSmc)
        .value("NominalOnly", ControlMode::NominalOnly)
        .value("OpenLoop", ControlMode::OpenLoop);

    py::class_<SimTrace>(m, "SimTrace")
        .def_readonly("x", &SimTrace::x)
        .def_readonly("u", &SimTrace::u)
        .def_readonly("u_n", &SimTrace::u_n)
        .def_readonly("u_r", &SimTrace::u_r)
        .def_readonly("s", &SimTrace::s)
        .def_readonly("w", &SimTrace::w)
        .def_readonly("V", &SimTrace::V)
        .def_readonly("diverged", &SimTrace::diverged)
        .def_readonly("divergence_step", &SimTrace::divergence_step);

    m.def(
        "simulate",
        [](const PlantModel& model, const std::optional<ControllerState>& ctrl,
           const DisturbanceSpec& dist, const Vector& x0, int steps, ControlMode mode,
           const std::optional<Matrix>& P) {
            SimSpec spec;
            spec.model = model;
            spec.controller = ctrl;
            spec.dist = dist;
            spec.x0 = x0;
            spec.steps = steps;
            spec.mode = mode;
            spec.P = P;
            py::gil_scoped_release release;
            return run(spec, false);
        },
        py::arg("model"), py::arg("controller") = std::nullopt, py::arg("dist"), py::arg("x0"),
        py::arg("steps"), py::arg("mode") = ControlMode::FullSmc, py::arg("P") = std::nullopt);

    py::class_<ReachingReport>(m, "ReachingReport")
        .def_readonly("f_bar_obs", &ReachingReport::f_bar_obs)
        .def_readonly("lambda_", &ReachingReport::lambda)
        .def_readonly("radii", &ReachingReport::radii)
        .def_readonly("violations_9a", &ReachingReport::violations_9a)
        .def_readonly("violations_9b", &ReachingReport::violations_9b)
        .def_readonly("checked_outside", &ReachingReport::checked_outside)
        .def_readonly("first_entry", &ReachingReport::first_entry)
        .def_readonly("residence", &ReachingReport::residence);
    m.def("check_reaching", &check_reaching, py::arg("trace"), py::arg("model"), py::arg("ctrl"),
          py::arg("ds"), py::arg("res"));

    py::class_<LyapunovReport>(m, "LyapunovReport")
        .def_readonly("checked", &LyapunovReport::checked)
        .def_readonly("holds", &LyapunovReport::holds)
        .def_readonly("fraction", &LyapunovReport::fraction)
        .def_readonly("worst_violation", &LyapunovReport::worst_violation);
    m.def("check_lyapunov", &check_lyapunov, py::arg("trace"), py::arg("model"), py::arg("ctrl"),
          py::arg("ds"), py::arg("res"));

    m.def("trace_converged", &trace_converged, py::arg("trace"), py::arg("threshold") = 0.05,
          py::arg("tail_fraction") = 0.2);
}
