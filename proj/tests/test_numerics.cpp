#include <cmath>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "kahler/numerics.hpp"

using namespace kahler;

TEST_CASE("fornberg weights reproduce the classical three point stencil") {
  const std::vector<double> x{-1.0, 0.0, 1.0};
  const auto w = num::fornberg_weights(0.0, x, 2);
  CHECK(w[0 * 3 + 1] == doctest::Approx(1.0));
  CHECK(w[1 * 3 + 0] == doctest::Approx(-0.5));
  CHECK(w[1 * 3 + 2] == doctest::Approx(0.5));
  CHECK(w[2 * 3 + 0] == doctest::Approx(1.0));
  CHECK(w[2 * 3 + 1] == doctest::Approx(-2.0));
  CHECK(w[2 * 3 + 2] == doctest::Approx(1.0));
}

TEST_CASE("stencil table is exact on low degree polynomials, including near the ends") {
  const auto x = num::linspace(0.0, 1.0, 40);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 - x[i] + 3.0 * std::pow(x[i], 4);
  const num::StencilTable table(x);
  for (std::size_t i : {std::size_t{0}, std::size_t{2}, std::size_t{20}, x.size() - 1}) {
    CHECK(table.derivative(y, i, 1) == doctest::Approx(-1.0 + 12.0 * std::pow(x[i], 3)).epsilon(1e-8));
    CHECK(table.derivative(y, i, 2) == doctest::Approx(36.0 * x[i] * x[i]).epsilon(1e-7).scale(1.0));
    CHECK(table.derivative(y, i, 4) == doctest::Approx(72.0).epsilon(1e-5));
  }
}

TEST_CASE("differentiate converges at high order on smooth data") {
  auto max_error = [](std::size_t n) {
    const auto x = num::linspace(0.0, 2.0, n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(x[i]);
    const auto d = num::differentiate(x, y, 1);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(d[i] - std::cos(x[i])));
    return e;
  };
  const double order = std::log2(max_error(41) / max_error(81));
  CHECK(order > 5.0);
}

TEST_CASE("integrals are exact for cubics on non-uniform grids") {
  kahler::testing::Gen gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x{0.0};
    for (int i = 0; i < 30; ++i) x.push_back(x.back() + gen.uniform(0.01, 0.2));
    const double c0 = gen.uniform(-1, 1), c1 = gen.uniform(-1, 1), c2 = gen.uniform(-1, 1), c3 = gen.uniform(-1, 1);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = c0 + x[i] * (c1 + x[i] * (c2 + x[i] * c3));
    auto antiderivative = [&](double t) { return t * (c0 + t * (c1 / 2 + t * (c2 / 3 + t * c3 / 4))); };
    const auto cumulative = num::cumulative_integral(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(cumulative[i] == doctest::Approx(antiderivative(x[i])).epsilon(1e-12).scale(1.0));
    CHECK(num::integrate(x, y) == doctest::Approx(antiderivative(x.back())).epsilon(1e-12));
  }
}

TEST_CASE("natural cubic spline interpolates knots and reproduces lines") {
  const auto x = num::logspace(1.0, 100.0, 30);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i] - 2.0;
  const num::CubicSpline spline(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(spline.value(x[i]) == doctest::Approx(y[i]));
  CHECK(spline.value(17.3) == doctest::Approx(3.0 * 17.3 - 2.0));
  CHECK(spline.derivative(42.0) == doctest::Approx(3.0));
  CHECK(std::abs(spline.second_derivative(42.0)) < 1e-10);
}

TEST_CASE("linspace and logspace hit both endpoints") {
  const auto a = num::linspace(-1.0, 3.0, 5);
  CHECK(a.front() == -1.0);
  CHECK(a.back() == 3.0);
  CHECK(a[1] == doctest::Approx(0.0));
  const auto g = num::logspace(1.0, 1000.0, 4);
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g.back() == doctest::Approx(1000.0));
}
