#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "kahler/errors.hpp"
#include "kahler/profiles.hpp"

using namespace kahler;

namespace {

// The three-term coefficient form, kept independent of the library's
// evaluation path.
double coefficient_form(int b, double s, double tau) {
  return s / (b * (b + 1.0)) * tau - (s / b - 1.0) * std::pow(tau, 1.0 - b) + (s / (b + 1.0) - 1.0) * std::pow(tau, -b);
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-300));
  return e;
}

}  // namespace

TEST_CASE("scalar flat profile matches the coefficient form") {
  kahler::testing::Gen gen(101);
  for (int trial = 0; trial < 40; ++trial) {
    const int b = gen.integer(1, 6);
    const double s = gen.uniform(0.0, 8.0);
    const auto phi = scalar_flat_profile(b, s);
    for (double tau : {1.5, 2.0, 7.0, 120.0}) {
      CHECK(phi.value(tau) == doctest::Approx(coefficient_form(b, s, tau)).epsilon(1e-12));
    }
  }
  CHECK(scalar_flat_profile(2, 1.0).value(2.0) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
}

TEST_CASE("scalar flat profile with zero base curvature") {
  for (int b = 1; b <= 5; ++b) {
    const auto phi = scalar_flat_profile(b, 0.0);
    for (double tau : {1.2, 3.0, 40.0}) {
      CHECK(phi.value(tau) == doctest::Approx(std::pow(tau, 1.0 - b) - std::pow(tau, -b)).epsilon(1e-13));
    }
  }
}

TEST_CASE("scalar flat ODE holds at random points") {
  kahler::testing::Gen gen(102);
  for (int trial = 0; trial < 100; ++trial) {
    const int b = gen.integer(1, 5);
    const double s = gen.uniform(0.0, 10.0);
    const double tau = gen.log_uniform(1.0, 1e3);
    const auto phi = scalar_flat_profile(b, s);
    const double p = phi.value(tau), dp = phi.first_derivative(tau), ddp = phi.second_derivative(tau);
    const double lhs = b * (b - 1.0) * std::pow(tau, b - 2) * p + 2.0 * b * std::pow(tau, b - 1) * dp + std::pow(tau, b) * ddp;
    const double rhs = s * std::pow(tau, b - 1);
    const double scale = std::abs(b * (b - 1.0) * std::pow(tau, b - 2) * p) + std::abs(2.0 * b * std::pow(tau, b - 1) * dp) +
                         std::abs(std::pow(tau, b) * ddp) + 1.0;
    CHECK(std::abs(lhs - rhs) / scale < 1e-12);
  }
}

TEST_CASE("exponential profile rate") {
  const auto one = exponential_profile(2, 6.0);
  CHECK(one.value(3.0) == doctest::Approx(3.0));
  const auto half = exponential_profile(2, 3.0);
  CHECK(half.value(4.0) == doctest::Approx(2.0));
  CHECK(half.tau_min() == 1.0);
  CHECK(std::isinf(half.tau_max()));
}

TEST_CASE("potential to profile on closed-form potentials") {
  SUBCASE("exponential gives a linear profile") {
    const double a = 0.5;
    const auto f = RadialPotential::exponential(a, -4.0, 4.0, 801);
    const auto phi = potential_to_profile(f);
    for (double tau : {0.3, 1.0, 5.0}) CHECK(phi.value(tau) == doctest::Approx(a * tau).epsilon(1e-12));
    // The closed-form tag must agree with exponential_profile.
    CHECK(phi.value(2.0) == doctest::Approx(exponential_profile(2, 3.0).value(2.0)));
  }
  SUBCASE("quadratic gives a constant profile") {
    const auto s = num::linspace(-3.0, 5.0, 801);
    std::vector<double> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f[i] = 0.5 * s[i] * s[i] + 10.0 * s[i];
    const auto phi = potential_to_profile(RadialPotential(s, f));
    for (double tau : {8.0, 10.0, 14.0}) CHECK(phi.value(tau) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("non-convex potentials are rejected with the offending node") {
  const auto s = num::linspace(0.0, 1.0, 11);
  std::vector<double> f(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) f[i] = s[i] + (i >= 6 ? -0.3 * s[i] * s[i] : 0.3 * s[i] * s[i]);
  try {
    RadialPotential bad(s, f);
    FAIL("expected an invariant violation");
  } catch (const InvariantViolation& e) {
    CHECK(e.node() != InvariantViolation::npos);
    CHECK(e.node() >= 5);
  }
}

TEST_CASE("profile to potential for a linear profile is exponential") {
  const double a = 0.7;
  const auto phi = MomentumProfile::linear(a, 1e-6);
  PotentialGrid grid{-3.0, 3.0, 601, 1.0, 0.0};
  const auto f = profile_to_potential(phi, grid);
  const auto fd = f.first_derivative();
  for (std::size_t i = 10; i + 10 < f.size(); i += 50) {
    CHECK(fd[i] == doctest::Approx(std::exp(a * f.s()[i])).epsilon(1e-8));
    CHECK(f.f()[i] == doctest::Approx((std::exp(a * f.s()[i]) - 1.0) / a).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("zero base curvature profile has s of order tau squared over two") {
  const auto phi = scalar_flat_profile(2, 0.0);
  const auto f = profile_to_potential(phi, PotentialGrid{-5.0, 200.0, 4001, 2.0, 0.0});
  const auto leg = legendre_transform(f);
  // s(tau) - tau^2/2 grows at most like tau, so the ratio tends to 1.
  const std::size_t last = leg.tau.size() - 1;
  const double tau = leg.tau[last];
  CHECK(tau > 15.0);
  CHECK(leg.s_of_tau[last] / (0.5 * tau * tau) == doctest::Approx(1.0).epsilon(2.0 / tau + 0.05));
}

TEST_CASE("round trip through the potential recovers the profile") {
  const auto phi = scalar_flat_profile(2, 1.0);
  const auto f = profile_to_potential(phi, PotentialGrid{-10.0, 30.0, 10001, 2.0, 0.0});
  const auto back = potential_to_profile(f);
  std::vector<double> got, want;
  for (double tau : num::logspace(1.1, 50.0, 200)) {
    got.push_back(back.value(tau));
    want.push_back(phi.value(tau));
  }
  CHECK(max_rel(got, want) < 1e-6);
}

TEST_CASE("round trip property over random sampled profiles") {
  kahler::testing::Gen gen(103);
  for (int trial = 0; trial < 8; ++trial) {
    const double a = gen.uniform(0.3, 1.5);
    const double c = gen.uniform(0.1, 2.0);
    const double w = gen.uniform(0.5, 3.0);
    auto value = [&](double t) { return t * (a + c / (1.0 + t)) * (1.0 + 0.1 * std::sin(w * std::log(t))); };
    const auto tau = num::logspace(0.01, 2000.0, 3000);
    std::vector<double> samples(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) samples[i] = value(tau[i]);
    const auto phi = MomentumProfile::sampled(tau, samples);
    const auto f = profile_to_potential(phi, PotentialGrid{-1.5, 3.0, 6001, 2.0, 0.0});
    const auto back = potential_to_profile(f);
    const auto leg = legendre_transform(f);
    std::vector<double> got, want;
    for (std::size_t i = 20; i + 20 < leg.tau.size(); i += 37) {
      got.push_back(back.value(leg.tau[i]));
      want.push_back(phi.value(leg.tau[i]));
    }
    CHECK(max_rel(got, want) < 1e-6);
  }
}

TEST_CASE("legendre transform of classical pairs") {
  SUBCASE("exponential") {
    const auto f = RadialPotential::exponential(1.0, -3.0, 3.0, 601);
    const auto leg = legendre_transform(f);
    for (std::size_t i = 0; i < leg.tau.size(); i += 40) {
      const double t = leg.tau[i];
      CHECK(leg.F[i] == doctest::Approx(t * std::log(t) - t).epsilon(1e-10).scale(1.0));
    }
  }
  SUBCASE("quadratic is self dual") {
    const auto s = num::linspace(-2.0, 2.0, 401);
    std::vector<double> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f[i] = 0.5 * s[i] * s[i];
    // Shift so the potential is increasing throughout.
    for (std::size_t i = 0; i < s.size(); ++i) f[i] += 3.0 * s[i];
    const auto leg = legendre_transform(RadialPotential(s, f));
    for (std::size_t i = 0; i < leg.tau.size(); i += 40) {
      const double t = leg.tau[i] - 3.0;
      CHECK(leg.F[i] == doctest::Approx(0.5 * t * t).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("double legendre transform is an involution up to a constant") {
  kahler::testing::Gen gen(104);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = gen.uniform(0.2, 1.0), c = gen.uniform(0.1, 1.0), k = gen.uniform(0.5, 2.0);
    const auto s = num::linspace(-3.0, 3.0, 3001);
    std::vector<double> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f[i] = std::exp(a * s[i]) / a + c * std::log(std::cosh(k * s[i])) + 2.0 * s[i];
    const RadialPotential pot(s, f);
    const auto inv = inverse_legendre(legendre_transform(pot));
    double worst = 0.0;
    const std::size_t ref = inv.s.size() / 2;
    const std::size_t ref_node = static_cast<std::size_t>(std::lround((inv.s[ref] - s.front()) / pot.spacing()));
    const double offset = inv.f[ref] - f[ref_node];
    for (std::size_t i = 5; i + 5 < inv.s.size(); ++i) {
      const std::size_t node = static_cast<std::size_t>(std::lround((inv.s[i] - s.front()) / pot.spacing()));
      CHECK(inv.s[i] == doctest::Approx(s[node]).epsilon(1e-6).scale(1.0));
      worst = std::max(worst, std::abs(inv.f[i] - offset - f[node]));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("potential invariants survive profile to potential") {
  kahler::testing::Gen gen(105);
  for (int trial = 0; trial < 10; ++trial) {
    const auto phi = scalar_flat_profile(gen.integer(1, 4), gen.uniform(0.0, 6.0));
    // Construction of RadialPotential checks f' > 0 and f'' > 0.
    CHECK_NOTHROW(profile_to_potential(phi, PotentialGrid{-6.0, 6.0, 1201, gen.uniform(1.5, 4.0), 0.0}));
  }
}

TEST_CASE("gauge: shifting f by a constant leaves the profile unchanged") {
  const auto f = profile_to_potential(scalar_flat_profile(3, 2.0), PotentialGrid{-4.0, 4.0, 801, 2.0, 0.0});
  const auto a = potential_to_profile(f);
  const auto b = potential_to_profile(f.shifted(17.25));
  // Only rounding of the larger samples separates the two.
  for (double tau : {1.5, 2.0, 3.0}) CHECK(a.value(tau) == doctest::Approx(b.value(tau)).epsilon(1e-9));
}

TEST_CASE("boundary extension") {
  for (int b = 1; b <= 5; ++b) {
    for (double s : {0.0, 0.5, 3.0, 9.0}) CHECK(check_boundary_extension(scalar_flat_profile(b, s), 1e-12).extends);
  }
  const auto linear = check_boundary_extension(MomentumProfile::linear(1.0, 0.5), 1e-12);
  CHECK_FALSE(linear.extends);
  CHECK(linear.value_residual == doctest::Approx(1.0));
  const auto made = MomentumProfile::from_functions([](double t) { return (t - 1) + 5 * (t - 1) * (t - 1); },
                                                    [](double t) { return 1 + 10 * (t - 1); }, [](double) { return 10.0; },
                                                    1.0, 10.0);
  CHECK(check_boundary_extension(made, 1e-12).extends);
  CHECK_THROWS_AS(check_boundary_extension(MomentumProfile::linear(1.0, 2.0), 1e-12), DomainError);
}

TEST_CASE("positive profiles only") {
  CHECK_THROWS_AS(MomentumProfile::sampled({1.0, 2.0, 3.0, 4.0}, {1.0, -1.0, 2.0, 3.0}), InvariantViolation);
  const auto bad = MomentumProfile::from_functions([](double t) { return 3.0 - t; }, [](double) { return -1.0; },
                                                   [](double) { return 0.0; }, 1.0, 10.0);
  CHECK_THROWS(profile_to_potential(bad, PotentialGrid{-1.0, 5.0, 101, 2.0, 0.0}));
}

TEST_CASE("csv and json round trips") {
  const auto phi = scalar_flat_profile(2, 1.0);
  const auto tau = num::logspace(1.1, 50.0, 64);
  std::stringstream csv;
  write_profile_csv(csv, tau, phi);
  CHECK(csv.str().rfind("tau,phi\n", 0) == 0);
  const auto back = read_profile_csv(csv);
  for (double t : tau) CHECK(back.value(t) == doctest::Approx(phi.value(t)).epsilon(1e-15));

  const auto f = RadialPotential::exponential(0.5, -1.0, 1.0, 21);
  std::stringstream pcsv;
  write_potential_csv(pcsv, f);
  CHECK(pcsv.str().rfind("s,f\n", 0) == 0);
  const auto fb = read_potential_csv(pcsv);
  REQUIRE(fb.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(fb.f()[i] == f.f()[i]);

  for (const auto& p : {phi, exponential_profile(3, 2.0, 1.5)}) {
    const auto j = closed_form_json(p);
    const auto q = closed_form_from_json(j);
    CHECK(q.family() == p.family());
    CHECK(q.value(3.0) == p.value(3.0));
    CHECK(q.tau_min() == p.tau_min());
    CHECK(closed_form_json(q) == j);
  }
}
