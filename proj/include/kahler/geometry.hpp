#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "kahler/curvature.hpp"
#include "kahler/profiles.hpp"

namespace kahler {

/// Least-squares line through (log x, log y).
struct PowerLawFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double max_abs_residual = 0.0;  // in log-log coordinates
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::size_t points = 0;
};

/// Fits y = e^intercept x^exponent using the samples with x in [x_lo, x_hi].
/// Requires at least 8 samples in the window and positive data there.
PowerLawFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys, double x_lo,
                          double x_hi);

/// Length of the fiber path between tau_a and tau_b: int dtau / (2 sqrt(phi)).
/// Uses tau = tau_a + u^2 so a simple zero of phi at tau_a stays integrable.
double fiber_distance(const MomentumProfile& phi, double tau_a, double tau_b);

/// tau with fiber_distance(phi, tau_from, tau) = r.
double tau_at_distance(const MomentumProfile& phi, double tau_from, double r);

/// G(tau) = int_{tau_unit}^tau dtau / phi, i.e. s = log |xi|^2 as a function of tau
/// with |xi| = 1 at tau_unit.
double log_norm_squared(const MomentumProfile& phi, double tau, double tau_unit);

/// Default tau at |xi| = 1: tau_min when phi(tau_min) > 0, otherwise 2.
double default_unit_tau(const MomentumProfile& phi);

/// Inverts G: tau such that log |xi|^2 = G(tau).
double norm_to_tau(const MomentumProfile& phi, double xi_norm, std::optional<double> tau_unit = std::nullopt);

/// tau(r)^(b+1) - tau_min^(b+1), r measured from tau_min along the fiber.
double ball_volume_proxy(const MomentumProfile& phi, int b, double r);

/// Sampled distance and radial volume density tau^b over a tau grid.
struct RadialMeasureModel {
  ModelParams params;
  std::vector<double> tau;
  std::vector<double> r_of_tau;   // distance from tau.front()
  std::vector<double> mu_of_tau;  // tau^b
};

RadialMeasureModel radial_measure_model(const MomentumProfile& phi, const ModelParams& params,
                                        const std::vector<double>& tau);

/// Radial Laplacian of u(s) for the metric with potential f:
/// u''/f'' + b u'/f' (derivatives in s).
double radial_laplacian(double f1, double f2, double u1, double u2, int b);

// ---------------------------------------------------------------------------
// Experiments

struct GrowthResult {
  PowerLawFit fit;
  double expected = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};

/// Ball volume proxy against r for r log-spaced in [r_lo, r_hi].
GrowthResult volume_growth(const MomentumProfile& phi, int b, double expected, double r_lo = 1e2,
                           double r_hi = 1e4, std::size_t points = 41);

/// Fiber distance from tau_min against |xi|, sampled so that the distance
/// covers [d_lo, d_hi].
GrowthResult distance_norm_growth(const MomentumProfile& phi, double expected, double d_lo = 1e2,
                                  double d_hi = 1e4, std::size_t points = 41);

/// tau against fiber distance from tau_min, distance in [d_lo, d_hi].
GrowthResult tau_distance_growth(const MomentumProfile& phi, double expected, double d_lo = 1e2,
                                 double d_hi = 1e4, std::size_t points = 41);

struct DecayResult {
  PowerLawFit fit;
  double expected = 0.0;
  bool exactly_flat = false;  // epsilon = 0: S vanished at every node, no fit
  std::vector<double> r;
  std::vector<double> S;
};

/// Exponential model with b = n-1 and S_base = S_hat + epsilon tau^(-n(n-1)/S_hat);
/// fits |S| against r over r in [r_lo, r_hi].
DecayResult decay_experiment(int n, double s_hat, double epsilon, double r_lo = 1e2, double r_hi = 1e4,
                             std::size_t points = 41);

struct BarrierReport {
  std::vector<double> tau;
  std::vector<double> lhs;  // Laplacian of rho^(-delta)
  std::vector<double> rhs;  // -(delta a / 2) rho^(-delta-2) (n - (delta+2)/2)
  double max_relative_gap = 0.0;
  double max_lhs = 0.0;     // largest (most positive) Laplacian value
  bool inequality_holds = false;
};

BarrierReport barrier_check(int n, double s_hat, double delta, const std::vector<double>& tau);

struct SobolevResult {
  double ratio = 0.0;
  bool degenerate = false;  // v identically zero
};

/// (int |v|^(2 gamma) dmu)^(1/gamma) / int |dv|^2 dmu with gamma = n/(n-1),
/// dmu = e^(a n t) dt and |dv|^2 = v'^2 e^(-a t) / a in the exponential model.
SobolevResult sobolev_ratio(const std::vector<double>& t, const std::vector<double>& v, int n, double s_hat);

struct SobolevSweep {
  std::vector<double> lambda;
  std::vector<double> ratio;
  double median = 0.0;
  double max_over_median = 0.0;
  double min_over_median = 0.0;
};

/// Ratios of v_lambda(t) = v(lambda t) for the bump v = (1 - z^2)^4,
/// z = (t - center) / half_width, on `points` samples per member.
SobolevSweep sobolev_scaling_sweep(int n, double s_hat, const std::vector<double>& lambdas,
                                   double center = 40.0, double half_width = 40.0, std::size_t points = 4001);

}  // namespace kahler
