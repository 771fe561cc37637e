// Python bindings. Problem documents and results cross the boundary as plain
// dicts in the same JSON layout the command-line tool reads and writes.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "quantstab/adversarial.hpp"
#include "quantstab/certificates.hpp"
#include "quantstab/data.hpp"
#include "quantstab/io.hpp"
#include "quantstab/lti.hpp"

namespace py = pybind11;
using namespace quantstab;
using io::json;

namespace {

json to_json(const py::handle& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

struct Loaded {
  io::Problem problem;
  UncertaintyEllipsoid ell;
};

Loaded load(const py::dict& doc) {
  io::Problem p = io::problem_from_json(to_json(doc));
  UncertaintyEllipsoid ell = build_ellipsoid(p.data, p.B, p.bound);
  return {std::move(p), std::move(ell)};
}

VectorXd single_input(const io::Problem& p) {
  if (p.B.cols() != 1) throw std::invalid_argument("synthesis needs a single input (B with one column)");
  return p.B.col(0);
}

}  // namespace

PYBIND11_MODULE(_quantstab, m) {
  m.doc() = "Data-driven stabilization with logarithmically quantized feedback";

  py::register_exception<io::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<HinfUndefined>(m, "HinfUndefined", PyExc_ArithmeticError);

  py::class_<LogQuantizer>(m, "LogQuantizer")
      .def(py::init<double, double>(), py::arg("rho"), py::arg("u0") = 1.0)
      .def_static("from_delta", &LogQuantizer::from_delta, py::arg("delta"), py::arg("u0") = 1.0)
      .def_property_readonly("rho", &LogQuantizer::rho)
      .def_property_readonly("u0", &LogQuantizer::u0)
      .def_property_readonly("delta", &LogQuantizer::delta)
      .def("level", &LogQuantizer::level, py::arg("i"))
      .def("level_index", &LogQuantizer::level_index, py::arg("v"))
      .def("__call__", &LogQuantizer::operator(), py::arg("v"));

  m.def("delta_from_rho", &delta_from_rho, py::arg("rho"));
  m.def("rho_from_delta", &rho_from_delta, py::arg("delta"));
  m.def("mahler_measure", &mahler_measure, py::arg("A"));

  m.def(
      "hinf_norm_bisection",
      [](const MatrixXd& A, const VectorXd& B, const RowVectorXd& K, double tolerance) {
        BisectionOptions opt;
        opt.tolerance = tolerance;
        return hinf_norm_bisection(A, B, K, opt);
      },
      py::arg("A"), py::arg("B"), py::arg("K"), py::arg("tolerance") = 1e-4);
  m.def(
      "frequency_response_norm",
      [](const MatrixXd& A, const VectorXd& B, const RowVectorXd& K, int grid_size) {
        return frequency_response_norm(ClosedLoopSystem(LinearSystem(A, B), K), grid_size);
      },
      py::arg("A"), py::arg("B"), py::arg("K"), py::arg("grid_size") = 4096);
  m.def(
      "simulate_quantized_closed_loop",
      [](const MatrixXd& A, const VectorXd& B, const RowVectorXd& K, double rho, const VectorXd& x0, int steps) {
        return simulate_quantized_closed_loop(ClosedLoopSystem(LinearSystem(A, B), K, LogQuantizer(rho)), x0, steps);
      },
      py::arg("A"), py::arg("B"), py::arg("K"), py::arg("rho"), py::arg("x0"), py::arg("steps"));

  m.def(
      "check_data",
      [](const py::dict& doc) {
        const Loaded l = load(doc);
        return to_python(io::to_json(informativity_report(l.problem.data, l.ell)));
      },
      py::arg("problem"), "Informativity report for a problem document.");
  m.def(
      "stabilize",
      [](const py::dict& doc, double delta) {
        const Loaded l = load(doc);
        const VectorXd B = single_input(l.problem);
        FixedDensityOutcome out;
        {
          py::gil_scoped_release release;
          out = solve_fixed_density(l.ell, B, delta);
        }
        return to_python(io::to_json(out));
      },
      py::arg("problem"), py::arg("delta"), "Solve the synthesis LMI at a fixed sector radius.");
  m.def(
      "coarsest",
      [](const py::dict& doc) {
        const Loaded l = load(doc);
        const VectorXd B = single_input(l.problem);
        DensityOutcome out;
        {
          py::gil_scoped_release release;
          out = maximize_density(l.ell, B);
        }
        return to_python(io::to_json(out));
      },
      py::arg("problem"), "Largest certifiable sector radius and its certificate.");
  m.def(
      "verify",
      [](const py::dict& doc, const py::dict& certificate, int samples, std::uint64_t seed) {
        const Loaded l = load(doc);
        const VectorXd B = single_input(l.problem);
        const auto cert = io::certificate_from_json(to_json(certificate));
        return to_python(io::to_json(verify_certificate(l.ell, B, cert, samples, seed)));
      },
      py::arg("problem"), py::arg("certificate"), py::arg("samples") = 50, py::arg("seed") = 0,
      "Check a certificate on sampled members of the uncertainty set.");
}
