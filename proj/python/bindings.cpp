#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kahler/blockmat.hpp"
#include "kahler/checks.hpp"
#include "kahler/curvature.hpp"
#include "kahler/errors.hpp"
#include "kahler/geometry.hpp"
#include "kahler/profiles.hpp"
#include "kahler/solver.hpp"

namespace py = pybind11;
using namespace kahler;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix<double> to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Matrix<double> m(a.shape(0), a.shape(1));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = r(i, j);
  }
  return m;
}

py::array_t<double> to_array(const Matrix<double>& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) w(i, j) = m(i, j);
  }
  return out;
}

Block2x2<double> split(const Array& t, std::size_t p) {
  const auto m = to_matrix(t);
  if (!m.square() || p == 0 || p >= m.rows()) throw std::invalid_argument("need a square matrix and 0 < p < n");
  return Block2x2<double>::partition(m, p);
}

ModelParams model(int b, double s_hat) {
  auto p = ModelParams::cscK(b, s_hat);
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_kahler, m) {
  m.doc() = "Radial scalar-flat Kähler metrics: profiles, curvature, geometry and the fixed-point solver";

  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", PyExc_ArithmeticError);

  py::class_<MomentumProfile>(m, "MomentumProfile")
      .def_static("sampled", &MomentumProfile::sampled, py::arg("tau"), py::arg("phi"))
      .def_static("linear", &MomentumProfile::linear, py::arg("a"), py::arg("tau_min") = 1.0,
                  py::arg("tau_max") = kInfinity)
      .def("value", &MomentumProfile::value)
      .def("first_derivative", &MomentumProfile::first_derivative)
      .def("second_derivative", &MomentumProfile::second_derivative)
      .def("__call__", py::vectorize(&MomentumProfile::value))
      .def_property_readonly("tau_min", &MomentumProfile::tau_min)
      .def_property_readonly("tau_max", &MomentumProfile::tau_max)
      .def_property_readonly("family", &MomentumProfile::family)
      .def("to_json", [](const MomentumProfile& p) { return closed_form_json(p); });

  m.def("scalar_flat_profile", &scalar_flat_profile, py::arg("b"), py::arg("s_hat"));
  m.def("exponential_profile", &exponential_profile, py::arg("b"), py::arg("s_hat"), py::arg("tau0") = 1.0);
  m.def("profile_from_json", &closed_form_from_json);
  m.def(
      "check_boundary_extension",
      [](const MomentumProfile& phi, double tol) {
        const auto r = check_boundary_extension(phi, tol);
        return py::dict(py::arg("extends") = r.extends, py::arg("value_residual") = r.value_residual,
                        py::arg("slope_residual") = r.slope_residual);
      },
      py::arg("phi"), py::arg("tol") = 1e-12);

  m.def(
      "scalar_curvature",
      [](const MomentumProfile& phi, int b, double s_hat, const std::vector<double>& tau) {
        return scalar_curvature(phi, model(b, s_hat), tau).S;
      },
      py::arg("phi"), py::arg("b"), py::arg("s_hat"), py::arg("tau"));
  m.def(
      "solve_prescribed_scalar",
      [](int b, double s_hat, const std::function<double(double)>& sigma, double tau_max, std::size_t n) {
        auto sol = solve_prescribed_scalar(model(b, s_hat), sigma, tau_max, n);
        return py::make_tuple(sol.tau, sol.phi, sol.truncated);
      },
      py::arg("b"), py::arg("s_hat"), py::arg("sigma"), py::arg("tau_max") = 100.0, py::arg("n") = 10000,
      "Returns (tau, phi, truncated).");

  m.def("fiber_distance", &fiber_distance, py::arg("phi"), py::arg("tau_a"), py::arg("tau_b"));
  m.def("norm_to_tau", &norm_to_tau, py::arg("phi"), py::arg("xi_norm"), py::arg("tau_unit") = std::nullopt);
  m.def("ball_volume_proxy", &ball_volume_proxy, py::arg("phi"), py::arg("b"), py::arg("r"));
  m.def(
      "fit_power_law",
      [](const std::vector<double>& x, const std::vector<double>& y, double lo, double hi) {
        const auto f = fit_power_law(x, y, lo, hi);
        return py::dict(py::arg("exponent") = f.exponent, py::arg("intercept") = f.intercept,
                        py::arg("max_abs_residual") = f.max_abs_residual, py::arg("points") = f.points);
      },
      py::arg("x"), py::arg("y"), py::arg("x_lo"), py::arg("x_hi"));
  m.def(
      "decay_experiment",
      [](int n, double s_hat, double epsilon) {
        const auto d = decay_experiment(n, s_hat, epsilon);
        return py::dict(py::arg("exponent") = d.fit.exponent, py::arg("expected") = d.expected,
                        py::arg("exactly_flat") = d.exactly_flat);
      },
      py::arg("n"), py::arg("s_hat"), py::arg("epsilon") = 1e-2);
  m.def(
      "barrier_check",
      [](int n, double s_hat, double delta, const std::vector<double>& tau) {
        const auto r = barrier_check(n, s_hat, delta, tau);
        return py::dict(py::arg("holds") = r.inequality_holds, py::arg("max_relative_gap") = r.max_relative_gap,
                        py::arg("max_lhs") = r.max_lhs);
      },
      py::arg("n"), py::arg("s_hat"), py::arg("delta"), py::arg("tau"));

  m.def(
      "schur_det", [](const Array& t, std::size_t p) { return schur_det(split(t, p)); }, py::arg("t"), py::arg("p"));
  m.def(
      "block_inverse", [](const Array& t, std::size_t p) { return to_array(block_inverse(split(t, p)).assemble()); },
      py::arg("t"), py::arg("p"));

  m.def(
      "solve",
      [](int b, double s_hat, std::size_t n, std::optional<double> amplitude) {
        const auto profile = scalar_flat_profile(b, s_hat);
        const auto f0 = scalar_flat_background(b, s_hat, 0.0, 10.0, n);
        const auto grid = make_radial_grid(f0, profile);
        const auto bg = background_from_profile(grid, f0, profile);
        const auto run = solve_from_bump(grid, bg, model(b, s_hat), default_delta(b, s_hat), {}, amplitude);
        return solve_trace_json(run.result.trace);
      },
      py::arg("b") = 2, py::arg("s_hat") = 3.0, py::arg("n") = 512, py::arg("amplitude") = std::nullopt,
      "Perturbs the scalar-flat background by a bump and runs the fixed-point iteration; returns the trace as JSON.");

  m.def(
      "verify_all",
      [](std::uint64_t seed) {
        checks::SuiteConfig config;
        config.seed = seed;
        py::gil_scoped_release release;
        return checks::to_json(checks::run_all(config), config);
      },
      py::arg("seed") = 20240601, "Runs the twelve acceptance criteria; returns the verdicts as JSON.");
}
