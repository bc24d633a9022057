#include "kahler/curvature.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "kahler/errors.hpp"
#include "kahler/numerics.hpp"

namespace kahler {

ModelParams ModelParams::cscK(int b, double s_hat) {
  ModelParams p;
  p.b = b;
  p.s_hat = s_hat;
  return p;
}

double ModelParams::base_deviation(double tau) const { return deviation ? deviation(tau) : 0.0; }

double ModelParams::base_deviation_derivative(double tau) const {
  return deviation_derivative ? deviation_derivative(tau) : 0.0;
}

double ModelParams::s_base(double tau) const { return s_hat + base_deviation(tau); }

void ModelParams::validate() const {
  if (b < 1) throw std::invalid_argument("ModelParams: b must be >= 1");
  if (!std::isfinite(s_hat)) throw std::invalid_argument("ModelParams: S_hat must be finite");
}

namespace {

void require_in_interval(const MomentumProfile& phi, double tau) {
  if (!phi.in_closure(tau)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "tau = %.17g outside the profile interval", tau);
    throw DomainError(buf);
  }
}

// S_hat tau^(b-1) - (tau^b phi)'' divided by tau^b, when the profile's own
// coefficients make the cscK part cancel exactly.
bool symbolic_defect(const MomentumProfile& phi, const ModelParams& params, double tau, double& out) {
  const double b = params.b;
  if (const auto* sf = std::get_if<ScalarFlatForm>(&phi.representation())) {
    if (sf->b != params.b) return false;
    out = (params.s_hat - sf->s_hat) / tau;
    return true;
  }
  if (const auto* lin = std::get_if<LinearForm>(&phi.representation())) {
    if (lin->b && lin->s_hat && *lin->b == params.b) {
      out = (params.s_hat - *lin->s_hat) / tau;
    } else {
      out = (params.s_hat - lin->a * b * (b + 1.0)) / tau;
    }
    return true;
  }
  return false;
}

}  // namespace

double scalar_curvature_at(const MomentumProfile& phi, const ModelParams& params, double tau) {
  require_in_interval(phi, tau);
  const double deviation = params.base_deviation(tau) / tau;
  double defect = 0.0;
  if (symbolic_defect(phi, params, tau, defect)) return deviation + defect;

  const double b = params.b;
  const double p0 = phi.value(tau);
  const double p1 = phi.first_derivative(tau);
  const double p2 = phi.second_derivative(tau);
  return params.s_hat / tau + deviation - (p2 + 2.0 * b * p1 / tau + b * (b - 1.0) * p0 / (tau * tau));
}

CurvatureReport scalar_curvature(const MomentumProfile& phi, const ModelParams& params,
                                 const std::vector<double>& tau) {
  params.validate();
  CurvatureReport out = ricci_coefficients(phi, params.b, tau);
  out.S.reserve(tau.size());
  for (double t : tau) out.S.push_back(scalar_curvature_at(phi, params, t));
  return out;
}

double scalar_curvature_trace_form(const MomentumProfile& phi, const ModelParams& params, double tau) {
  require_in_interval(phi, tau);
  const double b = params.b;
  const double p0 = phi.value(tau);
  const double p1 = phi.first_derivative(tau);
  const double p2 = phi.second_derivative(tau);
  const double a = p1 + b * p0 / tau;
  const double a1 = p2 + b * p1 / tau - b * p0 / (tau * tau);
  return -a1 - (b / tau) * a + params.s_base(tau) / tau;
}

CurvatureReport ricci_coefficients(const MomentumProfile& phi, int b, const std::vector<double>& tau) {
  if (b < 1) throw std::invalid_argument("ricci_coefficients: b must be >= 1");
  CurvatureReport out;
  out.tau = tau;
  out.ricci_fiber.reserve(tau.size());
  out.ricci_base.reserve(tau.size());
  for (double t : tau) {
    require_in_interval(phi, t);
    const auto r = ricci_at(t, phi.value(t), phi.first_derivative(t), phi.second_derivative(t), b);
    out.ricci_fiber.push_back(r.fiber);
    out.ricci_base.push_back(r.base);
  }
  return out;
}

RicciPoint ricci_at(double tau, double phi, double dphi, double ddphi, int b) {
  const double a = dphi + b * phi / tau;
  const double a1 = ddphi + b * dphi / tau - b * phi / (tau * tau);
  return {-phi * a1, -a};
}

PrescribedSolution solve_prescribed_scalar(const ModelParams& params, const std::function<double(double)>& sigma,
                                           double tau_max, std::size_t n) {
  params.validate();
  if (!(tau_max > 1.0)) throw std::invalid_argument("solve_prescribed_scalar: tau_max must exceed 1");
  if (n < 8) throw std::invalid_argument("solve_prescribed_scalar: need at least 8 nodes");

  const double b = params.b;
  const auto tau = num::logspace(1.0, tau_max, n);
  std::vector<double> x(n), g(n), g_dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(tau[i]);
    g[i] = params.s_base(tau[i]) * std::pow(tau[i], b - 1.0) - sigma(tau[i]) * std::pow(tau[i], b);
    g_dx[i] = g[i] * tau[i];
  }
  // u = tau^b phi: u'(1) = 1, u(1) = 0; integrate in x = log tau.
  auto du = num::cumulative_integral(x, g_dx);
  std::vector<double> du_dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    du[i] += 1.0;
    du_dx[i] = du[i] * tau[i];
  }
  const auto u = num::cumulative_integral(x, du_dx);

  PrescribedSolution out{MomentumProfile::linear(1.0), false, tau_max, {}, {}, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = tau[i];
    const double tb = std::pow(t, -b);
    const double p0 = u[i] * tb;
    if (i > 0 && !(p0 > 0.0)) {
      out.truncated = true;
      break;
    }
    out.tau.push_back(t);
    out.phi.push_back(i == 0 ? 0.0 : p0);
    out.phi_first.push_back(du[i] * tb - b * u[i] * tb / t);
    out.phi_second.push_back(g[i] * tb - 2.0 * b * du[i] * tb / t + b * (b + 1.0) * u[i] * tb / (t * t));
  }
  if (out.tau.size() < 3) throw DomainError("solve_prescribed_scalar: phi vanishes immediately after tau = 1");
  out.tau_end = out.tau.back();
  out.profile = MomentumProfile::sampled(out.tau, out.phi);
  return out;
}

void write_curvature_csv(std::ostream& out, const CurvatureReport& report) {
  out << "tau,S,ric_fiber,ric_base\n";
  char buf[128];
  for (std::size_t i = 0; i < report.tau.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", report.tau[i], report.S.at(i),
                  report.ricci_fiber.at(i), report.ricci_base.at(i));
    out << buf;
  }
}

}  // namespace kahler
