#include "kahler/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "kahler/errors.hpp"
#include "kahler/numerics.hpp"

namespace kahler {

namespace {

constexpr double kQuadratureTol = 1e-12;
constexpr unsigned kQuadratureDepth = 12;
constexpr int kMaxBracketSteps = 400;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class F>
double adaptive_integral(F&& f, double lo, double hi, const char* what) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, kQuadratureDepth, kQuadratureTol, &error);
  if (!std::isfinite(value) || !std::isfinite(error) || error > 1e-8 * std::max(1.0, std::abs(value)))
    throw DomainError(std::string(what) + ": integral does not converge on [" + fmt(lo) + ", " + fmt(hi) + "] (error " + fmt(error) + ")");
  return value;
}

double root_in(const std::function<double(double)>& g, double lo, double hi) {
  boost::uintmax_t iterations = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, tol, iterations);
  return 0.5 * (a + b);
}

double positive_phi(const MomentumProfile& phi, double tau) {
  const double p = phi.value(tau);
  if (!(p > 0.0)) throw InvariantViolation("phi <= 0 at tau = " + fmt(tau) + " inside the profile interval");
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

PowerLawFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys, double x_lo,
                          double x_hi) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_power_law: xs and ys differ in length");
  if (!(x_hi > x_lo)) throw std::invalid_argument("fit_power_law: empty window");
  const double slack = 1e-12;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < x_lo * (1.0 - slack) || xs[i] > x_hi * (1.0 + slack)) continue;
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_power_law: non-positive sample at index " + std::to_string(i));
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  if (lx.size() < 8) throw std::invalid_argument("fit_power_law: fewer than 8 samples in the window");

  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: window holds a single abscissa");

  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  for (std::size_t i = 0; i < lx.size(); ++i)
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(ly[i] - fit.intercept - fit.exponent * lx[i]));
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.points = lx.size();
  return fit;
}

// ---------------------------------------------------------------------------

double fiber_distance(const MomentumProfile& phi, double tau_a, double tau_b) {
  if (!(tau_a <= tau_b)) throw std::invalid_argument("fiber_distance: need tau_a <= tau_b");
  if (!phi.in_closure(tau_a) || !phi.in_closure(tau_b))
    throw DomainError("fiber_distance: [" + fmt(tau_a) + ", " + fmt(tau_b) + "] leaves the profile interval");
  if (tau_a == tau_b) return 0.0;

  // Near a zero of phi at tau_a substitute tau = tau_a + u^2, which removes the
  // inverse square-root singularity; elsewhere integrate in x = log tau, where
  // power-law profiles are smooth over many decades.
  const double width = std::min(tau_b - tau_a, std::max(1.0, tau_a));
  const double near_zero = phi.value(tau_a) <= 0.5 * phi.value(tau_a + width);
  double total = 0.0;
  double from = tau_a;
  if (near_zero) {
    auto substituted = [&](double u) {
      // t - tau_a is exact; u^2 would lose its low bits when added to tau_a.
      const double t = std::min(tau_a + u * u, tau_b);
      const double gap = t - tau_a;
      if (gap == 0.0) {
        const double slope = phi.first_derivative(tau_a);
        if (phi.value(tau_a) <= 0.0 && slope > 0.0) return 1.0 / std::sqrt(slope);
        return 0.0;
      }
      return std::sqrt(gap / positive_phi(phi, t));
    };
    total = adaptive_integral(substituted, 0.0, std::sqrt(width), "fiber_distance");
    from = tau_a + width;
    if (from >= tau_b) return total;
  }
  if (!(from > 0.0)) throw DomainError("fiber_distance: tau must be positive");
  auto logarithmic = [&](double x) {
    const double t = std::clamp(std::exp(x), from, tau_b);
    return 0.5 * t / std::sqrt(positive_phi(phi, t));
  };
  return total + adaptive_integral(logarithmic, std::log(from), std::log(tau_b), "fiber_distance");
}

double tau_at_distance(const MomentumProfile& phi, double tau_from, double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("tau_at_distance: r must be nonnegative");
  if (r == 0.0) return tau_from;
  double lo = tau_from;
  double d_lo = 0.0;
  double step = std::max(1.0, tau_from);
  for (int k = 0; k < kMaxBracketSteps; ++k) {
    double hi = lo + step;
    bool capped = false;
    if (hi >= phi.tau_max()) {
      hi = phi.tau_max();
      capped = true;
    }
    const double d_hi = d_lo + fiber_distance(phi, lo, hi);
    if (d_hi >= r) {
      const double base = lo;
      const double d_base = d_lo;
      return root_in([&](double t) { return d_base + fiber_distance(phi, base, t) - r; }, lo, hi);
    }
    if (capped) throw DomainError("tau_at_distance: r = " + fmt(r) + " beyond the profile interval");
    lo = hi;
    d_lo = d_hi;
    step *= 2.0;
  }
  throw DomainError("tau_at_distance: r = " + fmt(r) + " not reached");
}

double log_norm_squared(const MomentumProfile& phi, double tau, double tau_unit) {
  if (!(phi.in_closure(tau) && phi.in_closure(tau_unit)) || !(tau > 0.0) || !(tau_unit > 0.0))
    throw DomainError("log_norm_squared: tau outside the profile interval");
  if (tau == tau_unit) return 0.0;
  auto integrand = [&](double x) {
    const double t = std::exp(x);
    return t / positive_phi(phi, t);
  };
  const double lo = std::log(std::min(tau, tau_unit));
  const double hi = std::log(std::max(tau, tau_unit));
  const double v = adaptive_integral(integrand, lo, hi, "log_norm_squared");
  return tau > tau_unit ? v : -v;
}

double default_unit_tau(const MomentumProfile& phi) {
  if (phi.tau_min() > 0.0 && phi.value(phi.tau_min()) > 0.0) return phi.tau_min();
  return std::min(2.0 * std::max(phi.tau_min(), 0.5), 0.5 * (phi.tau_min() + phi.tau_max()));
}

double norm_to_tau(const MomentumProfile& phi, double xi_norm, std::optional<double> tau_unit) {
  if (!(xi_norm > 0.0)) throw std::invalid_argument("norm_to_tau: |xi| must be positive");
  const double unit = tau_unit ? *tau_unit : default_unit_tau(phi);
  const double s = 2.0 * std::log(xi_norm);
  if (s == 0.0) return unit;
  auto g = [&](double x) { return log_norm_squared(phi, std::exp(x), unit) - s; };

  const double x_unit = std::log(unit);
  if (s > 0.0) {
    const double x_cap = std::isfinite(phi.tau_max()) ? std::log(phi.tau_max()) : 700.0;
    double lo = x_unit;
    double step = 0.5;
    for (int k = 0; k < kMaxBracketSteps; ++k) {
      const double hi = std::min(lo + step, x_cap);
      if (g(hi) >= 0.0) return std::exp(root_in(g, lo, hi));
      if (hi >= x_cap) break;
      lo = hi;
      step *= 2.0;
    }
    throw DomainError("norm_to_tau: log |xi|^2 = " + fmt(s) + " beyond the profile's range");
  }
  const double floor_tau = phi.tau_min();
  double hi = x_unit;
  for (int k = 0; k < kMaxBracketSteps; ++k) {
    const double t_lo = floor_tau + (std::exp(hi) - floor_tau) * 0.5;
    if (!(t_lo > floor_tau) || !(t_lo > 0.0)) break;
    const double lo = std::log(t_lo);
    double value = 0.0;
    try {
      value = g(lo);
    } catch (const DomainError&) {
      break;
    }
    if (value <= 0.0) return std::exp(root_in(g, lo, hi));
    hi = lo;
  }
  throw DomainError("norm_to_tau: log |xi|^2 = " + fmt(s) + " below the profile's range");
}

double ball_volume_proxy(const MomentumProfile& phi, int b, double r) {
  if (b < 1) throw std::invalid_argument("ball_volume_proxy: b must be >= 1");
  const double t0 = phi.tau_min();
  const double t = tau_at_distance(phi, t0, r);
  return std::pow(t, b + 1.0) - std::pow(t0, b + 1.0);
}

RadialMeasureModel radial_measure_model(const MomentumProfile& phi, const ModelParams& params,
                                        const std::vector<double>& tau) {
  params.validate();
  RadialMeasureModel m;
  m.params = params;
  m.tau = tau;
  m.r_of_tau.assign(tau.size(), 0.0);
  m.mu_of_tau.resize(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (i > 0) {
      if (!(tau[i] > tau[i - 1]))
        throw InvariantViolation("radial_measure_model: tau grid not strictly increasing at node " +
                                     std::to_string(i),
                                 i);
      m.r_of_tau[i] = m.r_of_tau[i - 1] + fiber_distance(phi, tau[i - 1], tau[i]);
    }
    m.mu_of_tau[i] = std::pow(tau[i], params.b);
  }
  return m;
}

double radial_laplacian(double f1, double f2, double u1, double u2, int b) {
  return u2 / f2 + static_cast<double>(b) * u1 / f1;
}

// ---------------------------------------------------------------------------

GrowthResult volume_growth(const MomentumProfile& phi, int b, double expected, double r_lo, double r_hi,
                           std::size_t points) {
  GrowthResult out;
  out.expected = expected;
  out.x = num::logspace(r_lo, r_hi, points);
  for (double r : out.x) out.y.push_back(ball_volume_proxy(phi, b, r));
  out.fit = fit_power_law(out.x, out.y, r_lo, r_hi);
  return out;
}

GrowthResult distance_norm_growth(const MomentumProfile& phi, double expected, double d_lo, double d_hi,
                                  std::size_t points) {
  const double t0 = phi.tau_min();
  const double unit = default_unit_tau(phi);
  const double xi_lo = std::exp(0.5 * log_norm_squared(phi, tau_at_distance(phi, t0, d_lo), unit));
  const double xi_hi = std::exp(0.5 * log_norm_squared(phi, tau_at_distance(phi, t0, d_hi), unit));
  GrowthResult out;
  out.expected = expected;
  out.x = num::logspace(xi_lo, xi_hi, points);
  for (double xi : out.x) out.y.push_back(fiber_distance(phi, t0, norm_to_tau(phi, xi, unit)));
  out.fit = fit_power_law(out.x, out.y, xi_lo, xi_hi);
  return out;
}

GrowthResult tau_distance_growth(const MomentumProfile& phi, double expected, double d_lo, double d_hi,
                                 std::size_t points) {
  GrowthResult out;
  out.expected = expected;
  out.x = num::logspace(d_lo, d_hi, points);
  for (double d : out.x) out.y.push_back(tau_at_distance(phi, phi.tau_min(), d));
  out.fit = fit_power_law(out.x, out.y, d_lo, d_hi);
  return out;
}

DecayResult decay_experiment(int n, double s_hat, double epsilon, double r_lo, double r_hi, std::size_t points) {
  if (n < 2) throw std::invalid_argument("decay_experiment: n must be >= 2");
  if (!(s_hat > 0.0)) throw std::invalid_argument("decay_experiment: S_hat must be positive");
  const int b = n - 1;
  const double a = s_hat / (static_cast<double>(n) * (n - 1));
  const double p = 1.0 / a;  // |sigma|^2 = tau^(-n(n-1)/S_hat)

  ModelParams params = ModelParams::cscK(b, s_hat);
  if (epsilon != 0.0) {
    params.deviation = [=](double t) { return epsilon * std::pow(t, -p); };
    params.deviation_derivative = [=](double t) { return -epsilon * p * std::pow(t, -p - 1.0); };
  }
  const auto phi = exponential_profile(b, s_hat);

  DecayResult out;
  out.expected = -(2.0 + 2.0 * n * (n - 1.0) / s_hat);
  out.r = num::logspace(r_lo, r_hi, points);
  bool all_zero = true;
  for (double r : out.r) {
    const double tau = tau_at_distance(phi, phi.tau_min(), r);
    const double s = scalar_curvature_at(phi, params, tau);
    out.S.push_back(s);
    if (s != 0.0) all_zero = false;
  }
  if (all_zero) {
    out.exactly_flat = true;
    return out;
  }
  std::vector<double> magnitude(out.S.size());
  for (std::size_t i = 0; i < out.S.size(); ++i) magnitude[i] = std::abs(out.S[i]);
  out.fit = fit_power_law(out.r, magnitude, r_lo, r_hi);
  return out;
}

BarrierReport barrier_check(int n, double s_hat, double delta, const std::vector<double>& tau) {
  if (n < 2) throw std::invalid_argument("barrier_check: n must be >= 2");
  if (!(s_hat > 0.0)) throw std::invalid_argument("barrier_check: S_hat must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("barrier_check: delta must be positive");
  const int b = n - 1;
  const double a = s_hat / (static_cast<double>(n) * (n - 1));
  const double k = 0.5 * a * delta;

  BarrierReport out;
  out.tau = tau;
  out.inequality_holds = true;
  out.max_lhs = -std::numeric_limits<double>::infinity();
  for (double t : tau) {
    if (!(t > 0.0)) throw DomainError("barrier_check: tau must be positive");
    // f' = tau, f'' = a tau in the exponential model; u = rho^(-delta) = tau^(-delta/2).
    const double u = std::pow(t, -0.5 * delta);
    const double lhs = radial_laplacian(t, a * t, -k * u, k * k * u, b);
    const double rhs = -(delta * s_hat / (2.0 * n * (n - 1.0))) * std::pow(t, -0.5 * delta - 1.0) *
                       (n - 0.5 * (delta + 2.0));
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
    const double gap = std::abs(lhs - rhs) / scale;
    if (lhs != rhs) out.max_relative_gap = std::max(out.max_relative_gap, gap);
    if (lhs > rhs + 1e-8 * std::abs(rhs) && lhs != rhs) out.inequality_holds = false;
    out.max_lhs = std::max(out.max_lhs, lhs);
  }
  return out;
}

SobolevResult sobolev_ratio(const std::vector<double>& t, const std::vector<double>& v, int n, double s_hat) {
  if (n < 2) throw std::invalid_argument("sobolev_ratio: n must be >= 2");
  if (!(s_hat > 0.0)) throw std::invalid_argument("sobolev_ratio: S_hat must be positive");
  if (t.size() != v.size() || t.size() < num::StencilTable::kWidth)
    throw std::invalid_argument("sobolev_ratio: need at least 7 matching samples");

  double peak = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > peak) {
      peak = std::abs(v[i]);
      at = i;
    }
  if (peak == 0.0) return {0.0, true};
  if (std::abs(v.front()) > 1e-12 * peak || std::abs(v.back()) > 1e-12 * peak)
    throw std::invalid_argument("sobolev_ratio: v must vanish at both ends of the grid");

  const double a = s_hat / (static_cast<double>(n) * (n - 1));
  const double gamma = static_cast<double>(n) / (n - 1);
  const double t_ref = t[at];  // both sides scale by e^(a (n-1) t_ref)
  const auto dv = num::differentiate(t, v, 1);
  std::vector<double> top(t.size()), bottom(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = t[i] - t_ref;
    top[i] = std::pow(std::abs(v[i]), 2.0 * gamma) * std::exp(a * n * x);
    bottom[i] = dv[i] * dv[i] * std::exp(a * (n - 1.0) * x) / a;
  }
  if (!std::isfinite(top.front()) || !std::isfinite(top.back()))
    throw std::invalid_argument("sobolev_ratio: support too wide for the exponential weight in double range");
  const double numerator = std::pow(num::integrate(t, top), 1.0 / gamma);
  const double denominator = num::integrate(t, bottom);
  if (!(denominator > 0.0)) throw std::invalid_argument("sobolev_ratio: v has no gradient");
  return {numerator / denominator, false};
}

SobolevSweep sobolev_scaling_sweep(int n, double s_hat, const std::vector<double>& lambdas, double center,
                                   double half_width, std::size_t points) {
  if (lambdas.empty()) throw std::invalid_argument("sobolev_scaling_sweep: no lambdas");
  SobolevSweep out;
  out.lambda = lambdas;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw std::invalid_argument("sobolev_scaling_sweep: lambda must be positive");
    const auto t = num::linspace((center - half_width) / lambda, (center + half_width) / lambda, points);
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double z = (lambda * t[i] - center) / half_width;
      const double w = std::max(0.0, 1.0 - z * z);
      v[i] = w * w * w * w;
    }
    v.front() = 0.0;
    v.back() = 0.0;
    out.ratio.push_back(sobolev_ratio(t, v, n, s_hat).ratio);
  }
  auto sorted = out.ratio;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  out.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  out.max_over_median = sorted.back() / out.median;
  out.min_over_median = sorted.front() / out.median;
  return out;
}

}  // namespace kahler
