#include "kahler/profiles.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "json.hpp"
#include "kahler/errors.hpp"

namespace kahler {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// u = tau^b phi expanded in eps = tau - 1. With u'' = S tau^(b-1), u(1) = 0,
// u'(1) = 1 every term is a power of eps, so phi keeps full relative accuracy
// next to its zero at tau = 1.
struct ScalarFlatMoment {
  double u, du, ddu;
};

ScalarFlatMoment moment(const ScalarFlatForm& form, double tau) {
  const int b = form.b;
  const double eps = tau - 1.0;
  double binom = 1.0;
  double pw = eps;
  double first = 0.0;
  double second = 0.0;
  for (int k = 0; k < b; ++k) {
    first += binom * pw / (k + 1.0);
    second += binom * pw * eps / ((k + 1.0) * (k + 2.0));
    pw *= eps;
    binom = binom * (b - 1.0 - k) / (k + 1.0);
  }
  return {eps + form.s_hat * second, 1.0 + form.s_hat * first, form.s_hat * std::pow(tau, b - 1.0)};
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// RadialPotential

RadialPotential::RadialPotential(std::vector<double> s, std::vector<double> f,
                                 std::optional<double> exponential_rate)
    : s_(std::move(s)), f_(std::move(f)), rate_(exponential_rate) {
  if (s_.size() != f_.size()) throw std::invalid_argument("RadialPotential: s and f sizes differ");
  if (s_.size() < num::StencilTable::kWidth)
    throw std::invalid_argument("RadialPotential: need at least 7 samples");
  h_ = (s_.back() - s_.front()) / static_cast<double>(s_.size() - 1);
  if (!(h_ > 0.0)) throw InvariantViolation("RadialPotential: s grid must be increasing", 0);
  for (std::size_t i = 1; i < s_.size(); ++i) {
    if (std::abs((s_[i] - s_[i - 1]) - h_) > 1e-8 * std::max(1.0, std::abs(h_)))
      throw InvariantViolation("RadialPotential: s grid must be uniform", i);
  }
  const auto d1 = first_derivative();
  const auto d2 = second_derivative();
  for (std::size_t i = 1; i + 1 < s_.size(); ++i) {
    if (!(d1[i] > 0.0))
      throw InvariantViolation("RadialPotential: f is not increasing at node " + std::to_string(i), i);
    if (!(d2[i] > 0.0))
      throw InvariantViolation("RadialPotential: f is not strictly convex at node " + std::to_string(i), i);
  }
}

RadialPotential RadialPotential::exponential(double a, double s_min, double s_max, std::size_t n) {
  if (!(a > 0.0)) throw std::invalid_argument("exponential potential: a must be positive");
  auto s = num::linspace(s_min, s_max, n);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::exp(a * s[i]) / a;
  return RadialPotential(std::move(s), std::move(f), a);
}

std::vector<double> RadialPotential::first_derivative() const {
  return num::differentiate(s_, f_, 1);
}

std::vector<double> RadialPotential::second_derivative() const {
  return num::differentiate(s_, f_, 2);
}

RadialPotential RadialPotential::shifted(double constant) const {
  auto f = f_;
  for (auto& v : f) v += constant;
  return RadialPotential(s_, std::move(f), rate_);
}

// ---------------------------------------------------------------------------
// MomentumProfile

MomentumProfile::MomentumProfile(Representation rep, double tau_min, double tau_max)
    : rep_(std::move(rep)), tau_min_(tau_min), tau_max_(tau_max) {
  if (!(tau_max_ > tau_min_)) throw std::invalid_argument("MomentumProfile: empty interval");
}

MomentumProfile MomentumProfile::sampled(std::vector<double> tau, std::vector<double> phi) {
  if (tau.size() != phi.size() || tau.size() < 3)
    throw std::invalid_argument("sampled profile: need >= 3 matching samples");
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (!(tau[i] > tau[i - 1]))
      throw InvariantViolation("sampled profile: tau grid not strictly increasing at node " + std::to_string(i), i);
  for (std::size_t i = 1; i + 1 < tau.size(); ++i)
    if (!(phi[i] > 0.0))
      throw InvariantViolation("sampled profile: phi <= 0 at node " + std::to_string(i), i);
  const double lo = tau.front();
  const double hi = tau.back();
  return MomentumProfile(SampledForm{num::CubicSpline(std::move(tau), std::move(phi))}, lo, hi);
}

MomentumProfile MomentumProfile::linear(double a, double tau_min, double tau_max) {
  if (!(a > 0.0)) throw std::invalid_argument("linear profile: a must be positive");
  if (!(tau_min >= 0.0)) throw std::invalid_argument("linear profile: tau_min must be nonnegative");
  return MomentumProfile(LinearForm{a, std::nullopt, std::nullopt}, tau_min, tau_max);
}

MomentumProfile MomentumProfile::from_functions(std::function<double(double)> value,
                                                std::function<double(double)> first,
                                                std::function<double(double)> second, double tau_min,
                                                double tau_max, std::string label) {
  return MomentumProfile(FunctionForm{std::move(value), std::move(first), std::move(second), std::move(label)},
                         tau_min, tau_max);
}

bool MomentumProfile::in_closure(double tau) const noexcept {
  return tau >= tau_min_ && tau <= tau_max_;
}

bool MomentumProfile::is_closed_form() const noexcept {
  return std::holds_alternative<ScalarFlatForm>(rep_) || std::holds_alternative<LinearForm>(rep_);
}

std::string MomentumProfile::family() const {
  return std::visit(overloaded{[](const ScalarFlatForm&) { return std::string("scalar_flat"); },
                               [](const LinearForm&) { return std::string("linear"); },
                               [](const SampledForm&) { return std::string("sampled"); },
                               [](const FunctionForm& f) { return f.label; }},
                    rep_);
}

namespace {

void require_sampled_domain(const num::CubicSpline& spline, double tau) {
  const double slack = 1e-12 * std::max(1.0, std::abs(spline.back()));
  if (tau < spline.front() - slack || tau > spline.back() + slack)
    throw DomainError("sampled profile evaluated outside its grid at tau = " + fmt_double(tau));
}

}  // namespace

double MomentumProfile::value(double tau) const {
  return std::visit(overloaded{[&](const ScalarFlatForm& f) {
                                 return moment(f, tau).u * std::pow(tau, -f.b);
                               },
                               [&](const LinearForm& f) { return f.a * tau; },
                               [&](const SampledForm& f) {
                                 require_sampled_domain(f.spline, tau);
                                 return f.spline.value(tau);
                               },
                               [&](const FunctionForm& f) { return f.value(tau); }},
                    rep_);
}

double MomentumProfile::first_derivative(double tau) const {
  return std::visit(overloaded{[&](const ScalarFlatForm& f) {
                                 const auto m = moment(f, tau);
                                 const double b = f.b;
                                 return std::pow(tau, -b) * (m.du - b * m.u / tau);
                               },
                               [&](const LinearForm& f) { return f.a; },
                               [&](const SampledForm& f) {
                                 require_sampled_domain(f.spline, tau);
                                 return f.spline.derivative(tau);
                               },
                               [&](const FunctionForm& f) { return f.first(tau); }},
                    rep_);
}

double MomentumProfile::second_derivative(double tau) const {
  return std::visit(overloaded{[&](const ScalarFlatForm& f) {
                                 const auto m = moment(f, tau);
                                 const double b = f.b;
                                 return std::pow(tau, -b) *
                                        (m.ddu - 2.0 * b * m.du / tau + b * (b + 1.0) * m.u / (tau * tau));
                               },
                               [&](const LinearForm&) { return 0.0; },
                               [&](const SampledForm& f) {
                                 require_sampled_domain(f.spline, tau);
                                 return f.spline.second_derivative(tau);
                               },
                               [&](const FunctionForm& f) { return f.second(tau); }},
                    rep_);
}

// ---------------------------------------------------------------------------
// Conversions

MomentumProfile potential_to_profile(const RadialPotential& f) {
  const auto& s = f.s();
  if (auto a = f.exponential_rate()) {
    return MomentumProfile(LinearForm{*a, std::nullopt, std::nullopt}, std::exp(*a * s.front()),
                           std::exp(*a * s.back()));
  }
  const auto d1 = f.first_derivative();
  const auto d2 = f.second_derivative();
  std::vector<double> tau(d1.begin() + 1, d1.end() - 1);
  std::vector<double> phi(d2.begin() + 1, d2.end() - 1);
  return MomentumProfile::sampled(std::move(tau), std::move(phi));
}

namespace {

using OdeState = std::array<double, 2>;  // (tau, int_0^s tau)

// Integrates d tau / ds = phi(tau) together with its running integral from
// s = 0 to each of `times` (monotone, starting at 0) with error control.
void integrate_from_zero(const MomentumProfile& phi, double tau0, const std::vector<double>& times,
                         std::vector<OdeState>& out) {
  namespace ode = boost::numeric::odeint;
  auto rhs = [&](const OdeState& x, OdeState& dxds, double) {
    const double t = x[0];
    if (!phi.in_closure(t) && !phi.is_closed_form())
      throw DomainError("profile interval too short for the requested s-range (tau = " + fmt_double(t) + ")");
    dxds[0] = phi.value(t);
    dxds[1] = t;
  };
  auto observer = [&](const OdeState& x, double) { out.push_back(x); };
  OdeState x{tau0, 0.0};
  const double dt = times.size() > 1 && times[1] < times[0] ? -1e-3 : 1e-3;
  ode::integrate_times(ode::make_dense_output(1e-14, 1e-13, ode::runge_kutta_dopri5<OdeState>()), rhs, x,
                       times.begin(), times.end(), dt, observer);
}

}  // namespace

RadialPotential profile_to_potential(const MomentumProfile& phi, const PotentialGrid& grid) {
  if (!(grid.s_max > grid.s_min)) throw std::invalid_argument("profile_to_potential: empty s-range");
  if (grid.anchor < grid.s_min || grid.anchor > grid.s_max)
    throw DomainError("profile_to_potential: anchor outside the s-range");
  if (!(grid.tau_anchor > phi.tau_min() && grid.tau_anchor < phi.tau_max()))
    throw DomainError("profile_to_potential: tau_anchor outside the profile interval");

  const auto s = num::linspace(grid.s_min, grid.s_max, grid.n);

  // Output times on each side of s = 0; the anchor rides along as the last entry.
  std::vector<double> up{0.0}, down{0.0};
  std::vector<std::size_t> up_idx, down_idx;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] > 0.0) {
      up.push_back(s[i]);
      up_idx.push_back(i);
    }
  }
  for (std::size_t i = s.size(); i-- > 0;) {
    if (s[i] < 0.0) {
      down.push_back(s[i]);
      down_idx.push_back(i);
    }
  }
  std::vector<OdeState> up_states, down_states, anchor_state;
  if (up.size() > 1) integrate_from_zero(phi, grid.tau_anchor, up, up_states);
  if (down.size() > 1) integrate_from_zero(phi, grid.tau_anchor, down, down_states);
  if (grid.anchor == 0.0) {
    anchor_state.push_back({grid.tau_anchor, 0.0});
  } else {
    integrate_from_zero(phi, grid.tau_anchor, {0.0, grid.anchor}, anchor_state);
  }

  std::vector<double> tau(grid.n), f(grid.n);
  const double offset = anchor_state.back()[1];
  auto place = [&](const std::vector<OdeState>& states, const std::vector<std::size_t>& idx) {
    // states[0] is the initial point at s = 0.
    for (std::size_t k = 0; k < idx.size(); ++k) {
      tau[idx[k]] = states[k + 1][0];
      f[idx[k]] = states[k + 1][1] - offset;
    }
  };
  place(up_states, up_idx);
  place(down_states, down_idx);
  for (std::size_t i = 0; i < grid.n; ++i)
    if (s[i] == 0.0) {
      tau[i] = grid.tau_anchor;
      f[i] = -offset;
    }

  for (std::size_t i = 0; i < grid.n; ++i) {
    if (!(tau[i] > phi.tau_min() && tau[i] < phi.tau_max()))
      throw DomainError("profile interval too short for the requested s-range (s = " + fmt_double(s[i]) + ")");
    if (!(phi.value(tau[i]) > 0.0))
      throw InvariantViolation("profile_to_potential: phi <= 0 at tau = " + fmt_double(tau[i]), i);
  }

  std::optional<double> rate;
  if (const auto* lin = std::get_if<LinearForm>(&phi.representation())) rate = lin->a;
  return RadialPotential(s, std::move(f), rate);
}

LegendreData legendre_transform(const RadialPotential& f) {
  const auto d1 = f.first_derivative();
  LegendreData out;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    out.tau.push_back(d1[i]);
    out.s_of_tau.push_back(f.s()[i]);
    out.F.push_back(f.s()[i] * d1[i] - f.f()[i]);
  }
  for (std::size_t i = 1; i < out.tau.size(); ++i)
    if (!(out.tau[i] > out.tau[i - 1]))
      throw InvariantViolation("legendre_transform: tau = f' not increasing at node " + std::to_string(i + 1),
                               i + 1);
  return out;
}

InverseLegendre inverse_legendre(const LegendreData& data) {
  InverseLegendre out;
  out.s = num::differentiate(data.tau, data.F, 1);
  out.f.resize(out.s.size());
  for (std::size_t i = 0; i < out.s.size(); ++i) out.f[i] = out.s[i] * data.tau[i] - data.F[i];
  return out;
}

// ---------------------------------------------------------------------------
// Closed forms

MomentumProfile scalar_flat_profile(int b, double s_hat) {
  if (b < 1) throw std::invalid_argument("scalar_flat_profile: b must be >= 1");
  if (!(s_hat >= 0.0)) throw std::invalid_argument("scalar_flat_profile: S_hat must be >= 0");
  // (tau^b phi)'' = S tau^(b-1) >= 0 with (tau^b phi)(1) = 0, (tau^b phi)'(1) = 1,
  // so phi > 0 on all of (1, inf).
  return MomentumProfile(ScalarFlatForm{b, s_hat}, 1.0, kInfinity);
}

MomentumProfile exponential_profile(int b, double s_hat, double tau0) {
  if (b < 1) throw std::invalid_argument("exponential_profile: b must be >= 1");
  if (!(s_hat > 0.0)) throw std::invalid_argument("exponential_profile: S_hat must be > 0");
  const double a = s_hat / (static_cast<double>(b) * (b + 1.0));
  return MomentumProfile(LinearForm{a, b, s_hat}, tau0, kInfinity);
}

BoundaryReport check_boundary_extension(const MomentumProfile& phi, double tol) {
  if (!phi.in_closure(1.0)) throw DomainError("check_boundary_extension: tau = 1 outside the profile interval");
  BoundaryReport r;
  r.value_residual = std::abs(phi.value(1.0));
  r.slope_residual = std::abs(phi.first_derivative(1.0) - 1.0);
  r.extends = r.value_residual <= tol && r.slope_residual <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Serialisation

void write_profile_csv(std::ostream& out, const std::vector<double>& tau, const MomentumProfile& phi) {
  out << "tau,phi\n";
  for (double t : tau) out << fmt_double(t) << ',' << fmt_double(phi.value(t)) << '\n';
}

void write_potential_csv(std::ostream& out, const RadialPotential& f) {
  out << "s,f\n";
  for (std::size_t i = 0; i < f.size(); ++i) out << fmt_double(f.s()[i]) << ',' << fmt_double(f.f()[i]) << '\n';
}

namespace {

std::pair<std::vector<double>, std::vector<double>> read_two_columns(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::invalid_argument("expected CSV header '" + header + "'");
  std::vector<double> x, y;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("malformed CSV row: " + line);
    x.push_back(std::stod(line.substr(0, comma)));
    y.push_back(std::stod(line.substr(comma + 1)));
  }
  return {std::move(x), std::move(y)};
}

nlohmann::json bound_to_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

MomentumProfile read_profile_csv(std::istream& in) {
  auto [tau, phi] = read_two_columns(in, "tau,phi");
  return MomentumProfile::sampled(std::move(tau), std::move(phi));
}

RadialPotential read_potential_csv(std::istream& in) {
  auto [s, f] = read_two_columns(in, "s,f");
  return RadialPotential(std::move(s), std::move(f));
}

std::string closed_form_json(const MomentumProfile& phi) {
  nlohmann::ordered_json j;
  if (const auto* sf = std::get_if<ScalarFlatForm>(&phi.representation())) {
    j["family"] = "scalar_flat";
    j["b"] = sf->b;
    j["S_hat"] = sf->s_hat;
  } else if (const auto* lin = std::get_if<LinearForm>(&phi.representation())) {
    j["family"] = "linear";
    j["a"] = lin->a;
    if (lin->b) j["b"] = *lin->b;
    if (lin->s_hat) j["S_hat"] = *lin->s_hat;
  } else {
    throw std::invalid_argument("closed_form_json: profile is not a closed form");
  }
  j["tau_min"] = bound_to_json(phi.tau_min());
  j["tau_max"] = bound_to_json(phi.tau_max());
  return j.dump();
}

MomentumProfile closed_form_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto bound = [&](const char* key, double fallback) {
    return j.contains(key) && !j[key].is_null() ? j[key].get<double>() : fallback;
  };
  const std::string family = j.at("family").get<std::string>();
  const double lo = bound("tau_min", 1.0);
  const double hi = bound("tau_max", kInfinity);
  if (family == "scalar_flat")
    return MomentumProfile(ScalarFlatForm{j.at("b").get<int>(), j.at("S_hat").get<double>()}, lo, hi);
  if (family == "linear") {
    LinearForm form{j.at("a").get<double>(), std::nullopt, std::nullopt};
    if (j.contains("b")) form.b = j["b"].get<int>();
    if (j.contains("S_hat")) form.s_hat = j["S_hat"].get<double>();
    return MomentumProfile(form, lo, hi);
  }
  throw std::invalid_argument("closed_form_from_json: unknown family '" + family + "'");
}

}  // namespace kahler
