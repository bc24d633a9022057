#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "kahler/errors.hpp"
#include "kahler/geometry.hpp"

using namespace kahler;

TEST_CASE("fiber distance for a linear profile") {
  const auto phi = MomentumProfile::linear(1.0, 0.5);
  CHECK(fiber_distance(phi, 1.0, 9.0) == doctest::Approx(2.0).epsilon(1e-12));
  kahler::testing::Gen gen(301);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = gen.log_uniform(1e-3, 1e3), b = gen.log_uniform(1e-3, 1e6);
    const double lo = std::max(0.5, std::min(a, b)), hi = std::max(a, b) + 1.0;
    CHECK(fiber_distance(phi, lo, hi) == doctest::Approx(std::sqrt(hi) - std::sqrt(lo)).epsilon(1e-10));
  }
}

TEST_CASE("inverting the distance of phi = a tau") {
  kahler::testing::Gen gen(302);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = gen.uniform(0.1, 3.0), tau0 = gen.uniform(1.0, 4.0), d = gen.log_uniform(1e-2, 1e4);
    const auto phi = MomentumProfile::linear(a, 1.0);
    const double expected = std::pow(std::sqrt(a) * d + std::sqrt(tau0), 2);
    CHECK(tau_at_distance(phi, tau0, d) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("fiber distance is monotone and additive") {
  kahler::testing::Gen gen(303);
  for (int trial = 0; trial < 40; ++trial) {
    const auto phi = scalar_flat_profile(gen.integer(1, 4), gen.uniform(0.0, 6.0));
    std::vector<double> cuts{1.0, gen.uniform(1.0, 3.0), gen.uniform(3.0, 50.0), gen.uniform(50.0, 1e4)};
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double piece = fiber_distance(phi, cuts[i], cuts[i + 1]);
      CHECK(piece > 0.0);
      sum += piece;
    }
    const double whole = fiber_distance(phi, cuts.front(), cuts.back());
    CHECK(std::abs(sum - whole) <= 1e-12 * whole);
  }
}

TEST_CASE("distance from the zero section of a flat-base profile") {
  // phi = tau^(1-b) - tau^(-b): distance grows like tau^((b+1)/2) / (b+1).
  for (int b : {1, 2, 3}) {
    const auto phi = scalar_flat_profile(b, 0.0);
    const double tau = 1e6;
    const double ratio = fiber_distance(phi, 1.0, tau) / (std::pow(tau, (b + 1) / 2.0) / (b + 1));
    CHECK(ratio == doctest::Approx(1.0).epsilon(1e-2));
    const auto g = tau_distance_growth(phi, 2.0 / (b + 1));
    CHECK(g.fit.exponent == doctest::Approx(2.0 / (b + 1)).epsilon(0.02));
  }
}

TEST_CASE("norm to tau") {
  SUBCASE("linear profile") {
    kahler::testing::Gen gen(304);
    for (int trial = 0; trial < 20; ++trial) {
      const double a = gen.uniform(0.1, 2.0), xi = gen.log_uniform(1.5, 1e3);
      const auto phi = MomentumProfile::linear(a, 1e-300);
      CHECK(norm_to_tau(phi, xi, 1.0) == doctest::Approx(std::pow(xi, 2 * a)).epsilon(1e-9));
    }
  }
  SUBCASE("flat base: tau^b is about b log |xi|^2") {
    const int b = 2;
    const auto phi = scalar_flat_profile(b, 0.0);
    const double log_xi = 400.0;
    const double tau = norm_to_tau(phi, std::exp(log_xi), 2.0);
    CHECK(std::pow(tau, b) / (b * 2.0 * log_xi) == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("out of range") {
    const auto phi = MomentumProfile::linear(1.0, 1.0, 10.0);
    CHECK_THROWS_AS(norm_to_tau(phi, 1e6, 1.0), DomainError);
  }
}

TEST_CASE("distance against norm") {
  for (int b : {1, 2, 3}) {
    const double s = 2.5;
    const double a = s / (b * (b + 1.0));
    const auto lin = distance_norm_growth(exponential_profile(b, s), a);
    CHECK(lin.fit.exponent == doctest::Approx(a).epsilon(0.02));
    const auto flat = distance_norm_growth(scalar_flat_profile(b, s), a);
    CHECK(flat.fit.exponent == doctest::Approx(a).epsilon(0.02));
  }
}

TEST_CASE("volume growth laws and their composition with the distance law") {
  for (int b : {1, 2, 3}) {
    const auto positive = volume_growth(scalar_flat_profile(b, 2.0), b, 2.0 * (b + 1));
    CHECK(positive.fit.exponent == doctest::Approx(2.0 * (b + 1)).epsilon(0.02));
    const auto flat = volume_growth(scalar_flat_profile(b, 0.0), b, 2.0);
    CHECK(flat.fit.exponent == doctest::Approx(2.0).epsilon(0.02));
    const auto tau_law = tau_distance_growth(scalar_flat_profile(b, 0.0), 2.0 / (b + 1));
    CHECK(flat.fit.exponent == doctest::Approx((b + 1) * tau_law.fit.exponent).epsilon(0.02));
    const int n = b + 1;
    const auto model = volume_growth(exponential_profile(b, 3.0), b, 2.0 * n);
    CHECK(model.fit.exponent == doctest::Approx(2.0 * n).epsilon(0.02));
  }
  CHECK(ball_volume_proxy(exponential_profile(2, 6.0), 2, 0.0) == 0.0);
}

TEST_CASE("power law fits") {
  const auto xs = num::logspace(1.0, 100.0, 20);
  std::vector<double> square(xs.size()), inverse(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    square[i] = xs[i] * xs[i];
    inverse[i] = 3.0 * std::pow(xs[i], -6.0);
  }
  const auto f2 = fit_power_law(xs, square, 1.0, 100.0);
  CHECK(f2.exponent == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f2.max_abs_residual < 1e-12);
  const auto f6 = fit_power_law(xs, inverse, 1.0, 100.0);
  CHECK(f6.exponent == doctest::Approx(-6.0).epsilon(1e-12));
  CHECK(f6.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  kahler::testing::Gen gen(305);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto wide = num::logspace(1.0, 1e4, 200);
  for (int trial = 0; trial < 20; ++trial) {
    const double p = gen.uniform(-4.0, 4.0);
    std::vector<double> ys(wide.size());
    for (std::size_t i = 0; i < wide.size(); ++i) ys[i] = std::pow(wide[i], p) * (1.0 + noise(gen.engine()));
    CHECK(std::abs(fit_power_law(wide, ys, 1.0, 1e4).exponent - p) < 0.02);
  }

  std::vector<double> bad = square;
  bad[3] = -1.0;
  CHECK_THROWS(fit_power_law(xs, bad, 1.0, 100.0));
  CHECK_THROWS(fit_power_law(xs, square, 1.0, 1.5));
}

TEST_CASE("decay experiment") {
  const auto a = decay_experiment(3, 3.0, 1e-2);
  CHECK(a.expected == doctest::Approx(-6.0));
  CHECK(a.fit.exponent == doctest::Approx(-6.0).epsilon(0.03));
  const auto b = decay_experiment(3, 2.0, 1e-2);
  CHECK(b.fit.exponent == doctest::Approx(-8.0).epsilon(0.03));
  const auto flat = decay_experiment(3, 3.0, 0.0);
  CHECK(flat.exactly_flat);
  CHECK(std::all_of(flat.S.begin(), flat.S.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("barrier estimate on the exponential model") {
  const auto tau = num::logspace(2.0, 1e6, 300);
  const auto eq = barrier_check(3, 3.0, 5.0, tau);
  CHECK(eq.max_relative_gap < 1e-8);
  CHECK(eq.inequality_holds);

  const auto zero = barrier_check(4, 3.0, 6.0, tau);
  for (std::size_t i = 0; i < tau.size(); ++i) {
    CHECK(zero.rhs[i] == 0.0);
    CHECK(std::abs(zero.lhs[i]) < 1e-10);
  }

  kahler::testing::Gen gen(306);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(2, 6);
    const double delta = gen.uniform(0.05, 2.0 * n - 2.0 - 0.05);
    const auto r = barrier_check(n, gen.uniform(0.5, 8.0), delta, tau);
    CHECK(r.max_lhs < 0.0);
  }
}

TEST_CASE("radial laplacian formula") {
  CHECK(radial_laplacian(2.0, 4.0, 3.0, 8.0, 2) == doctest::Approx(8.0 / 4.0 + 2 * 3.0 / 2.0));
}

TEST_CASE("sobolev ratio") {
  const auto t = num::linspace(0.0, 20.0, 2001);
  const std::vector<double> zero(t.size(), 0.0);
  const auto z = sobolev_ratio(t, zero, 3, 3.0);
  CHECK(z.degenerate);
  CHECK(z.ratio == 0.0);

  std::vector<double> bump(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = (t[i] - 10.0) / 10.0;
    bump[i] = std::pow(1.0 - u * u, 4);
  }
  const auto r = sobolev_ratio(t, bump, 3, 3.0);
  CHECK_FALSE(r.degenerate);
  CHECK(r.ratio > 0.0);
  CHECK(std::isfinite(r.ratio));

  std::vector<double> open = bump;
  open.back() = 1.0;
  CHECK_THROWS(sobolev_ratio(t, open, 3, 3.0));

  std::vector<double> lambdas;
  for (int k = -8; k <= 8; ++k) lambdas.push_back(std::pow(2.0, k / 4.0));
  const auto sweep = sobolev_scaling_sweep(3, 3.0, lambdas);
  CHECK(sweep.max_over_median <= 1.2);
  CHECK(sweep.min_over_median >= 1.0 / 1.2);
}
