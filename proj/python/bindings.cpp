// Python bindings. Matrices cross as numpy arrays; branches and curve points
// become plain classes with read-only fields.

#include "infobif/anneal.hpp"
#include "infobif/curve.hpp"
#include "infobif/dataset_io.hpp"
#include "infobif/errors.hpp"
#include "infobif/spectral.hpp"
#include "infobif/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace infobif;

namespace {

ObjectiveKind kind_of(const std::string& name) { return objective_from_string(name); }

}  // namespace

PYBIND11_MODULE(_infobif, m) {
  m.doc() = "Annealing, bifurcation analysis and relevance-compression curves";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergence", base.ptr());
  py::register_exception<InfeasibleI0>(m, "InfeasibleI0", base.ptr());
  py::register_exception<DegenerateKernel>(m, "DegenerateKernel", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SegmentTooShort>(m, "SegmentTooShort", base.ptr());

  py::class_<JointDistribution>(m, "JointDistribution")
      .def(py::init<Matrix>(), py::arg("p"))
      .def_property_readonly("matrix", &JointDistribution::matrix)
      .def_property_readonly("px", &JointDistribution::px)
      .def_property_readonly("py", &JointDistribution::py)
      .def_property_readonly("mutual_information", &JointDistribution::mutual_information)
      .def_property_readonly("kx", &JointDistribution::kx)
      .def_property_readonly("k", &JointDistribution::k);

  py::class_<Quantizer>(m, "Quantizer")
      .def(py::init<Matrix>(), py::arg("q"))
      .def_static("uniform", &Quantizer::uniform, py::arg("n"), py::arg("k"))
      .def_static("normalized", &Quantizer::normalized, py::arg("q"))
      .def_property_readonly("matrix", &Quantizer::matrix)
      .def_property_readonly("classes", &Quantizer::classes);

  // Functionals take q as a plain array so callers need not wrap it.
  m.def("mutual_information_xyn",
        py::overload_cast<const JointDistribution&, const Matrix&>(&mutual_information_xyn));
  m.def("mutual_information_yyn",
        py::overload_cast<const JointDistribution&, const Matrix&>(&mutual_information_yyn));
  m.def("conditional_entropy",
        py::overload_cast<const JointDistribution&, const Matrix&>(&conditional_entropy_yn_given_y));
  m.def("grad_I", py::overload_cast<const JointDistribution&, const Matrix&>(&grad_I));
  m.def(
      "grad_G",
      [](const std::string& kind, const JointDistribution& p, const Matrix& q) {
        return grad_G(kind_of(kind), p, q);
      },
      py::arg("kind"), py::arg("p"), py::arg("q"));
  m.def(
      "hessian_F",
      [](const std::string& kind, const JointDistribution& p, const Matrix& q, double beta) {
        return hessian_F(kind_of(kind), p, q, beta);
      },
      py::arg("kind"), py::arg("p"), py::arg("q"), py::arg("beta"));

  py::class_<SpectralClassification>(m, "SpectralClassification")
      .def_readonly("lagrangian_eigenvalues", &SpectralClassification::lagrangian_eigenvalues)
      .def_readonly("constrained_eigenvalues", &SpectralClassification::constrained_eigenvalues)
      .def_readonly("solves_lagrangian", &SpectralClassification::solves_lagrangian)
      .def_readonly("solves_constrained", &SpectralClassification::solves_constrained);

  py::class_<StationaryPoint>(m, "StationaryPoint")
      .def_property_readonly("q", [](const StationaryPoint& s) { return s.q.matrix(); })
      .def_readonly("beta", &StationaryPoint::beta)
      .def_readonly("lam", &StationaryPoint::lambda)
      .def_readonly("kkt_residual", &StationaryPoint::kkt_residual)
      .def_readonly("objective_value", &StationaryPoint::objective_value)
      .def_readonly("information", &StationaryPoint::constraint_value)
      .def_readonly("spectral", &StationaryPoint::spectral);

  py::class_<BifurcationEvent>(m, "BifurcationEvent")
      .def_readonly("beta", &BifurcationEvent::beta)
      .def_property_readonly("kind", [](const BifurcationEvent& e) { return std::string(to_string(e.kind)); })
      .def_readonly("parent_branch", &BifurcationEvent::parent_branch)
      .def_readonly("child_branches", &BifurcationEvent::child_branches)
      .def_readonly("information", &BifurcationEvent::information);

  py::class_<Branch>(m, "Branch")
      .def_readonly("id", &Branch::id)
      .def_readonly("parent", &Branch::parent)
      .def_readonly("points", &Branch::points)
      .def_readonly("events", &Branch::events)
      .def_readonly("symmetry", &Branch::symmetry)
      .def_property_readonly("provenance",
                             [](const Branch& b) { return std::string(to_string(b.provenance)); });

  py::class_<AnnealSchedule>(m, "AnnealSchedule")
      .def(py::init<>())
      .def_readwrite("beta_start", &AnnealSchedule::beta_start)
      .def_readwrite("beta_max", &AnnealSchedule::beta_max)
      .def_readwrite("step", &AnnealSchedule::step)
      .def_readwrite("step_min", &AnnealSchedule::step_min)
      .def_readwrite("perturbation", &AnnealSchedule::perturbation)
      .def_readwrite("max_fixed_point_iters", &AnnealSchedule::max_fixed_point_iters)
      .def_readwrite("convergence_tol", &AnnealSchedule::convergence_tol)
      .def_readwrite("seed", &AnnealSchedule::seed)
      .def_readwrite("max_step_dq", &AnnealSchedule::max_step_dq);

  m.def(
      "anneal",
      [](const JointDistribution& p, int classes, const AnnealSchedule& schedule,
         const std::string& kind) {
        py::gil_scoped_release release;
        return anneal(kind_of(kind), p, classes, schedule);
      },
      py::arg("p"), py::arg("classes"), py::arg("schedule") = AnnealSchedule{},
      py::arg("kind") = "distortion");
  m.def(
      "classify",
      [](const JointDistribution& p, const Matrix& q, double beta, const std::string& kind) {
        const StationaryPoint sp = make_stationary_point(kind_of(kind), p, Quantizer(q), beta);
        return classify_stationary_point(kind_of(kind), p, sp);
      },
      py::arg("p"), py::arg("q"), py::arg("beta"), py::arg("kind") = "distortion");

  py::class_<CurvePoint>(m, "CurvePoint")
      .def_readonly("I0", &CurvePoint::I0)
      .def_readonly("R", &CurvePoint::R)
      .def_readonly("beta", &CurvePoint::beta)
      .def_readonly("branch_id", &CurvePoint::branch_id)
      .def_readonly("kkt_residual", &CurvePoint::kkt_residual)
      .def_readonly("information", &CurvePoint::information)
      .def_readonly("lam", &CurvePoint::lambda)
      .def_property_readonly("q", [](const CurvePoint& c) { return c.q.matrix(); });

  m.def(
      "solve_constrained",
      [](const JointDistribution& p, double I0, int classes, const std::string& kind,
         std::uint64_t seed) {
        ConstrainedOptions o;
        o.classes = classes;
        o.seed = seed;
        py::gil_scoped_release release;
        return solve_constrained(kind_of(kind), p, I0, std::nullopt, o);
      },
      py::arg("p"), py::arg("I0"), py::arg("classes") = 2, py::arg("kind") = "distortion",
      py::arg("seed") = 0);
  m.def(
      "build_curve",
      [](const JointDistribution& p, double I0_min, double I0_max, int points, int classes,
         const std::string& kind, std::uint64_t seed, int jobs) {
        CurveSpec s;
        s.I0_min = I0_min;
        s.I0_max = I0_max;
        s.points = points;
        s.classes = classes;
        s.kind = kind_of(kind);
        s.seed = seed;
        s.jobs = jobs;
        py::gil_scoped_release release;
        return build_curve(s, p);
      },
      py::arg("p"), py::arg("I0_min"), py::arg("I0_max"), py::arg("points"),
      py::arg("classes") = 2, py::arg("kind") = "distortion", py::arg("seed") = 0,
      py::arg("jobs") = 1);
  m.def("achievable_information",
        [](const JointDistribution& p, int classes) { return achievable_information(p, classes).value; },
        py::arg("p"), py::arg("classes"));

  py::class_<Theorem3Report>(m, "DerivativeReport")
      .def_readonly("max_rel_err", &Theorem3Report::max_rel_err)
      .def_readonly("max_second_abs_err", &Theorem3Report::max_second_abs_err)
      .def_readonly("sign_changes", &Theorem3Report::sign_changes)
      .def_readonly("segments_checked", &Theorem3Report::segments_checked);
  m.def("verify_theorem3", &verify_theorem3, py::arg("curve"), py::arg("min_points") = 5);

  m.def(
      "gen_four_gaussian",
      [](int components, int grid_x, int grid_y, std::uint64_t seed, double jitter) {
        GaussianMixtureSpec s = GaussianMixtureSpec::default_components(components);
        s.grid_x = grid_x;
        s.grid_y = grid_y;
        s.seed = seed;
        s.jitter = jitter;
        return gen_four_gaussian(s);
      },
      py::arg("components") = 4, py::arg("grid_x") = 52, py::arg("grid_y") = 52,
      py::arg("seed") = 0, py::arg("jitter") = 0.0);
  m.def("load_joint", &load_joint, py::arg("path"));
  m.def("save_joint", &save_joint, py::arg("p"), py::arg("path"));

  m.def(
      "run_verify",
      [](const std::string& suite, std::uint64_t seed) {
        VerifyOptions o;
        o.seed = seed;
        const auto results = run_verify(suite, o);
        py::dict out;
        for (const auto& r : results) out[py::str(r.suite)] = r.pass();
        return out;
      },
      py::arg("suite") = "all", py::arg("seed") = 0);
}
