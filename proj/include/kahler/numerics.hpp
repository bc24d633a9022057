#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace kahler::num {

std::vector<double> linspace(double first, double last, std::size_t n);

/// Geometrically spaced samples; both endpoints must be positive.
std::vector<double> logspace(double first, double last, std::size_t n);

/// Finite-difference weights (Fornberg's recursion) for derivatives of order
/// 0..max_order at `x0`, using the nodes `x`. Row k of the result holds the
/// weights for the k-th derivative: result[k * x.size() + j].
std::vector<double> fornberg_weights(double x0, std::span<const double> x, int max_order);

/// Sliding-window differentiation table on a fixed grid.
///
/// Every node uses the `width` consecutive nodes closest to it (centred in the
/// interior, shifted one-sided near the ends). With width 7 the interior
/// accuracy is sixth order for first and second derivatives and fourth order
/// for third and fourth derivatives.
class StencilTable {
 public:
  static constexpr std::size_t kWidth = 7;
  static constexpr int kMaxOrder = 4;

  StencilTable() = default;
  explicit StencilTable(std::span<const double> x);

  std::size_t size() const noexcept { return start_.size(); }

  /// First node of the window used at node i.
  std::size_t window_start(std::size_t i) const { return start_[i]; }

  /// Weights of derivative `order` at node i, one per window node.
  std::span<const double> weights(std::size_t i, int order) const;

  /// Derivative of the given order at node i.
  double derivative(std::span<const double> y, std::size_t i, int order) const;

  /// Derivative of the given order at every node.
  std::vector<double> derivative(std::span<const double> y, int order) const;

 private:
  std::vector<std::size_t> start_;
  // [node][order][j]
  std::vector<std::array<std::array<double, kWidth>, kMaxOrder + 1>> w_;
};

/// Convenience wrapper around StencilTable for one-off derivatives.
std::vector<double> differentiate(std::span<const double> x, std::span<const double> y, int order);

/// Running integral I_i = int_{x_0}^{x_i} y dx. Each cell integrates the cubic
/// through the four nearest samples (exact for cubics, fourth order overall);
/// works on non-uniform grids.
std::vector<double> cumulative_integral(std::span<const double> x, std::span<const double> y);

/// Total integral over the sampled range, same rule as cumulative_integral.
double integrate(std::span<const double> x, std::span<const double> y);

/// Natural cubic spline through strictly increasing knots.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  const std::vector<double>& knots() const noexcept { return x_; }
  const std::vector<double>& values() const noexcept { return y_; }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::size_t segment(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

}  // namespace kahler::num
