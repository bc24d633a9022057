#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "kahler/profiles.hpp"

namespace kahler {

/// Model data of the base: complex dimension b, mean scalar curvature S_hat
/// and the base scalar curvature S_base(tau).
///
/// S_base is stored as S_hat + deviation(tau) so that the cscK part can be
/// cancelled exactly against closed-form profiles; the deviation alone then
/// carries small perturbations without being swamped by rounding.
struct ModelParams {
  int b = 1;
  double s_hat = 0.0;
  std::function<double(double)> deviation;             // empty means 0
  std::function<double(double)> deviation_derivative;  // d/dtau of deviation; empty means 0

  static ModelParams cscK(int b, double s_hat);

  double s_base(double tau) const;
  double base_deviation(double tau) const;
  double base_deviation_derivative(double tau) const;

  /// Throws std::invalid_argument unless b >= 1.
  void validate() const;
};

struct CurvatureReport {
  std::vector<double> tau;
  std::vector<double> S;
  std::vector<double> ricci_fiber;  // -phi (phi' + b phi / tau)'
  std::vector<double> ricci_base;   // -(phi' + b phi / tau)
};

/// S(tau) = S_base(tau)/tau - tau^(-b) (tau^b phi)''. Closed forms built on the
/// same b cancel their cscK coefficient symbolically.
double scalar_curvature_at(const MomentumProfile& phi, const ModelParams& params, double tau);

CurvatureReport scalar_curvature(const MomentumProfile& phi, const ModelParams& params,
                                 const std::vector<double>& tau);

/// Same quantity assembled from A = phi' + b phi / tau as
/// -A' - (b/tau) A + S_base/tau; no symbolic cancellation.
double scalar_curvature_trace_form(const MomentumProfile& phi, const ModelParams& params, double tau);

CurvatureReport ricci_coefficients(const MomentumProfile& phi, int b, const std::vector<double>& tau);

struct RicciPoint {
  double fiber;  // -phi (phi' + b phi / tau)'
  double base;   // -(phi' + b phi / tau)
};

/// Ricci coefficients from pointwise values of phi, phi', phi''.
RicciPoint ricci_at(double tau, double phi, double dphi, double ddphi, int b);

struct PrescribedSolution {
  MomentumProfile profile;
  bool truncated = false;  // phi reached zero before tau_max
  double tau_end = 0.0;    // last node kept
  // Node data from the double quadrature: exact derivative structure of
  // u = tau^b phi, useful where spline derivatives are too coarse.
  std::vector<double> tau;
  std::vector<double> phi;
  std::vector<double> phi_first;
  std::vector<double> phi_second;
};

/// Solves (tau^b phi)'' = S_base tau^(b-1) - sigma tau^b on [1, tau_max] with
/// phi(1) = 0, phi'(1) = 1 by double quadrature on a log-spaced grid of n nodes.
PrescribedSolution solve_prescribed_scalar(const ModelParams& params, const std::function<double(double)>& sigma,
                                           double tau_max, std::size_t n);

/// CSV with header `tau,S,ric_fiber,ric_base`.
void write_curvature_csv(std::ostream& out, const CurvatureReport& report);

}  // namespace kahler
