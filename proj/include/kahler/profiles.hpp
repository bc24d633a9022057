#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kahler/numerics.hpp"

namespace kahler {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Samples of a Kähler potential f(s) on a uniform grid in s = log |w|^2.
///
/// Construction enforces the potential's invariants at interior nodes:
/// f is strictly increasing (f' > 0) and strictly convex (f'' > 0).
/// Violations raise InvariantViolation naming the first offending node.
class RadialPotential {
 public:
  RadialPotential(std::vector<double> s, std::vector<double> f,
                  std::optional<double> exponential_rate = std::nullopt);

  /// f(s) = exp(a s) / a sampled on [s_min, s_max]; tagged as closed form.
  static RadialPotential exponential(double a, double s_min, double s_max, std::size_t n);

  const std::vector<double>& s() const noexcept { return s_; }
  const std::vector<double>& f() const noexcept { return f_; }
  std::size_t size() const noexcept { return s_.size(); }
  double spacing() const noexcept { return h_; }

  /// Rate a of the closed-form exponential family, when tagged.
  std::optional<double> exponential_rate() const noexcept { return rate_; }

  std::vector<double> first_derivative() const;
  std::vector<double> second_derivative() const;

  RadialPotential shifted(double constant) const;

 private:
  std::vector<double> s_;
  std::vector<double> f_;
  double h_ = 0.0;
  std::optional<double> rate_;
};

/// phi(tau) = S/(b(b+1)) tau - (S/b - 1) tau^(1-b) + (S/(b+1) - 1) tau^(-b):
/// the scalar-flat momentum profile over a cscK base with scalar curvature S.
struct ScalarFlatForm {
  int b = 1;
  double s_hat = 0.0;
};

/// phi(tau) = a tau. When built from model data (b, S_hat) the pair is kept so
/// curvature evaluation can cancel coefficients symbolically.
struct LinearForm {
  double a = 1.0;
  std::optional<int> b;
  std::optional<double> s_hat;
};

/// Samples on a strictly increasing tau grid, interpolated by a natural cubic spline.
struct SampledForm {
  num::CubicSpline spline;
};

/// User-supplied closed form with its first two derivatives.
struct FunctionForm {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
  std::string label;
};

/// Momentum profile phi(tau) on an interval (tau_min, tau_max).
///
/// phi is positive on the open interval; tau_max may be infinite for closed
/// forms. Immutable after construction.
class MomentumProfile {
 public:
  using Representation = std::variant<ScalarFlatForm, LinearForm, SampledForm, FunctionForm>;

  MomentumProfile(Representation rep, double tau_min, double tau_max);

  static MomentumProfile sampled(std::vector<double> tau, std::vector<double> phi);
  static MomentumProfile linear(double a, double tau_min = 1.0, double tau_max = kInfinity);
  static MomentumProfile from_functions(std::function<double(double)> value,
                                        std::function<double(double)> first,
                                        std::function<double(double)> second, double tau_min,
                                        double tau_max, std::string label = "function");

  double value(double tau) const;
  double first_derivative(double tau) const;
  double second_derivative(double tau) const;

  double tau_min() const noexcept { return tau_min_; }
  double tau_max() const noexcept { return tau_max_; }

  /// True when tau lies in the closed interval [tau_min, tau_max].
  bool in_closure(double tau) const noexcept;

  const Representation& representation() const noexcept { return rep_; }
  bool is_closed_form() const noexcept;

  /// "scalar_flat", "linear", "sampled" or the function label.
  std::string family() const;

 private:
  Representation rep_;
  double tau_min_;
  double tau_max_;
};

/// Legendre dual of a potential, sampled at the interior nodes of its grid.
struct LegendreData {
  std::vector<double> tau;       // tau_i = f'(s_i)
  std::vector<double> F;         // F(tau_i) = s_i tau_i - f(s_i)
  std::vector<double> s_of_tau;  // s_i
};

MomentumProfile potential_to_profile(const RadialPotential& f);

/// Grid and normalisation for profile_to_potential.
struct PotentialGrid {
  double s_min = -10.0;
  double s_max = 10.0;
  std::size_t n = 2001;
  /// tau at s = 0; fixes the additive constant of G with G' = 1/phi.
  double tau_anchor = 2.0;
  /// f(anchor) = 0.
  double anchor = 0.0;
};

/// Integrates d tau / ds = phi(tau) from s = 0, tau = tau_anchor, then
/// f(s) = int_anchor^s tau ds.
RadialPotential profile_to_potential(const MomentumProfile& phi, const PotentialGrid& grid);

LegendreData legendre_transform(const RadialPotential& f);

/// Recovers (s, f) from Legendre data using only the (tau, F) samples:
/// s = F'(tau), f = s tau - F.
struct InverseLegendre {
  std::vector<double> s;
  std::vector<double> f;
};
InverseLegendre inverse_legendre(const LegendreData& data);

MomentumProfile scalar_flat_profile(int b, double s_hat);

/// phi = a tau with a = S_hat / (b (b+1)) on (tau0, inf).
MomentumProfile exponential_profile(int b, double s_hat, double tau0 = 1.0);

struct BoundaryReport {
  bool extends = false;
  double value_residual = 0.0;  // |phi(1)|
  double slope_residual = 0.0;  // |phi'(1) - 1|
};

/// Checks phi(1) = 0 and phi'(1) = 1, the conditions for the metric to close
/// up smoothly across the zero section.
BoundaryReport check_boundary_extension(const MomentumProfile& phi, double tol);

// CSV with header `tau,phi` / `s,f`; JSON record for closed forms.
void write_profile_csv(std::ostream& out, const std::vector<double>& tau, const MomentumProfile& phi);
void write_potential_csv(std::ostream& out, const RadialPotential& f);
MomentumProfile read_profile_csv(std::istream& in);
RadialPotential read_potential_csv(std::istream& in);
std::string closed_form_json(const MomentumProfile& phi);
MomentumProfile closed_form_from_json(const std::string& text);

}  // namespace kahler
