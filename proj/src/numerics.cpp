#include "kahler/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kahler::num {

std::vector<double> linspace(double first, double last, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace: need at least two samples");
  std::vector<double> out(n);
  const double step = (last - first) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = first + step * static_cast<double>(i);
  out.back() = last;
  return out;
}

std::vector<double> logspace(double first, double last, std::size_t n) {
  if (!(first > 0.0) || !(last > 0.0)) throw std::invalid_argument("logspace: endpoints must be positive");
  auto out = linspace(std::log(first), std::log(last), n);
  for (auto& v : out) v = std::exp(v);
  out.front() = first;
  out.back() = last;
  return out;
}

std::vector<double> fornberg_weights(double x0, std::span<const double> x, int max_order) {
  const std::size_t n = x.size();
  const auto m = static_cast<std::size_t>(max_order);
  std::vector<double> c(n * (m + 1), 0.0);
  auto at = [&](std::size_t node, std::size_t k) -> double& { return c[k * n + node]; };

  double c1 = 1.0;
  double c4 = x[0] - x0;
  at(0, 0) = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          at(i, k) = c1 * (static_cast<double>(k) * at(i - 1, k - 1) - c5 * at(i - 1, k)) / c2;
        at(i, 0) = -c1 * c5 * at(i - 1, 0) / c2;
      }
      for (std::size_t k = mn; k >= 1; --k)
        at(j, k) = (c4 * at(j, k) - static_cast<double>(k) * at(j, k - 1)) / c3;
      at(j, 0) = c4 * at(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

StencilTable::StencilTable(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < kWidth) throw std::invalid_argument("StencilTable: need at least 7 nodes");
  start_.resize(n);
  w_.resize(n);
  const std::size_t half = kWidth / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t st = i < half ? 0 : std::min(i - half, n - kWidth);
    start_[i] = st;
    const auto c = fornberg_weights(x[i], x.subspan(st, kWidth), kMaxOrder);
    for (int k = 0; k <= kMaxOrder; ++k)
      for (std::size_t j = 0; j < kWidth; ++j) w_[i][k][j] = c[static_cast<std::size_t>(k) * kWidth + j];
  }
}

std::span<const double> StencilTable::weights(std::size_t i, int order) const {
  return {w_[i][static_cast<std::size_t>(order)].data(), kWidth};
}

double StencilTable::derivative(std::span<const double> y, std::size_t i, int order) const {
  const auto& w = w_[i][static_cast<std::size_t>(order)];
  const std::size_t st = start_[i];
  double acc = 0.0;
  for (std::size_t j = 0; j < kWidth; ++j) acc += w[j] * y[st + j];
  return acc;
}

std::vector<double> StencilTable::derivative(std::span<const double> y, int order) const {
  if (y.size() != size()) throw std::invalid_argument("StencilTable: sample count mismatch");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = derivative(y, i, order);
  return out;
}

std::vector<double> differentiate(std::span<const double> x, std::span<const double> y, int order) {
  return StencilTable(x).derivative(y, order);
}

namespace {

// Integral over [x[k], x[k+1]] of the cubic interpolating four nearby samples,
// evaluated with two-point Gauss-Legendre (exact for cubics).
double cell_integral(std::span<const double> x, std::span<const double> y, std::size_t k) {
  const std::size_t n = x.size();
  if (n < 4) {
    return 0.5 * (x[k + 1] - x[k]) * (y[k] + y[k + 1]);
  }
  std::size_t st = k == 0 ? 0 : k - 1;
  st = std::min(st, n - 4);
  const double a = x[k];
  const double b = x[k + 1];
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double g = half / std::sqrt(3.0);
  double total = 0.0;
  for (double t : {mid - g, mid + g}) {
    double p = 0.0;
    for (std::size_t i = st; i < st + 4; ++i) {
      double li = 1.0;
      for (std::size_t j = st; j < st + 4; ++j)
        if (j != i) li *= (t - x[j]) / (x[i] - x[j]);
      p += li * y[i];
    }
    total += p;
  }
  return total * half;
}

}  // namespace

std::vector<double> cumulative_integral(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("cumulative_integral: bad sizes");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) out[k + 1] = out[k] + cell_integral(x, y, k);
  return out;
}

double integrate(std::span<const double> x, std::span<const double> y) {
  return cumulative_integral(x, y).back();
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 3 || y_.size() != n) throw std::invalid_argument("CubicSpline: need >= 3 matching samples");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("CubicSpline: knots must be strictly increasing");

  // Tridiagonal system for interior second derivatives; natural ends m0 = mn = 0.
  m_.assign(n, 0.0);
  std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double lower = x_[i] - x_[i - 1];
    const double factor = lower / diag[i - 1];
    diag[i] -= factor * upper[i - 1];
    rhs[i] -= factor * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
    if (i == 1) break;
  }
}

std::size_t CubicSpline::segment(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double CubicSpline::value(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double a = (x_[k + 1] - x) / h;
  const double b = (x - x_[k]) / h;
  return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double a = (x_[k + 1] - x) / h;
  const double b = (x - x_[k]) / h;
  return (y_[k + 1] - y_[k]) / h + ((1.0 - 3.0 * a * a) * m_[k] + (3.0 * b * b - 1.0) * m_[k + 1]) * h / 6.0;
}

double CubicSpline::second_derivative(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double a = (x_[k + 1] - x) / h;
  const double b = (x - x_[k]) / h;
  return a * m_[k] + b * m_[k + 1];
}

}  // namespace kahler::num
