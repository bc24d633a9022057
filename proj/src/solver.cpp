#include "kahler/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <lapacke.h>

#include "json.hpp"
#include "kahler/errors.hpp"
#include "kahler/geometry.hpp"

namespace kahler {

namespace {

constexpr std::size_t kWidth = num::StencilTable::kWidth;

void require_size(const RadialGrid& grid, std::span<const double> v, const char* what) {
  if (v.size() != grid.n) throw std::invalid_argument(std::string(what) + ": sample count does not match the grid");
}

// Value and derivative of the base-curvature deviation divided by tau.
struct DeviationTerm {
  double value;       // dev(tau) / tau
  double derivative;  // d/dtau of the above
};

DeviationTerm deviation_term(const ModelParams& params, double tau) {
  if (!params.deviation) return {0.0, 0.0};
  const double d = params.base_deviation(tau);
  const double dd = params.base_deviation_derivative(tau);
  return {d / tau, dd / tau - d / (tau * tau)};
}

struct Point {
  double f1, f2, f3, f4;
};

Point point_at(const Jets& a, const Jets* b, std::size_t i) {
  Point p{a[1][i], a[2][i], a[3][i], a[4][i]};
  if (b) {
    p.f1 += (*b)[1][i];
    p.f2 += (*b)[2][i];
    p.f3 += (*b)[3][i];
    p.f4 += (*b)[4][i];
  }
  if (!(p.f1 > 0.0) || !(p.f2 > 0.0))
    throw InvariantViolation("scalar_map: potential not increasing and convex at node " + std::to_string(i), i);
  return p;
}

// S in terms of the jets: tau = f', phi = f'', phi' = f'''/f'', phi'' = f''''/f''^2 - f'''^2/f''^3.
double scalar_at(const Point& p, const ModelParams& params) {
  const double b = params.b;
  const auto dev = deviation_term(params, p.f1);
  return params.s_hat / p.f1 + dev.value - b * (b - 1.0) * p.f2 / (p.f1 * p.f1) - 2.0 * b * p.f3 / (p.f1 * p.f2) -
         p.f4 / (p.f2 * p.f2) + p.f3 * p.f3 / (p.f2 * p.f2 * p.f2);
}

std::array<double, 4> partials_at(const Point& p, const ModelParams& params) {
  const double b = params.b;
  const double f1 = p.f1, f2 = p.f2, f3 = p.f3, f4 = p.f4;
  const auto dev = deviation_term(params, f1);
  return {
      -params.s_hat / (f1 * f1) + dev.derivative + 2.0 * b * (b - 1.0) * f2 / (f1 * f1 * f1) +
          2.0 * b * f3 / (f1 * f1 * f2),
      -b * (b - 1.0) / (f1 * f1) + 2.0 * b * f3 / (f1 * f2 * f2) + 2.0 * f4 / (f2 * f2 * f2) -
          3.0 * f3 * f3 / (f2 * f2 * f2 * f2),
      -2.0 * b / (f1 * f2) + 2.0 * f3 / (f2 * f2 * f2),
      -1.0 / (f2 * f2),
  };
}

std::vector<double> interior_only(const RadialGrid& grid, std::vector<double> v) {
  for (std::size_t i = 0; i < kBoundaryRows; ++i) {
    v[i] = 0.0;
    v[grid.n - 1 - i] = 0.0;
  }
  return v;
}

double weight(const RadialGrid& grid, std::size_t i, double delta) {
  return std::pow(grid.r[i] * grid.r[i] + 1.0, 0.5 * delta);
}

}  // namespace

// ---------------------------------------------------------------------------

RadialGrid make_radial_grid(const RadialPotential& f0, const MomentumProfile& background) {
  if (f0.size() < 64) throw std::invalid_argument("make_radial_grid: need at least 64 nodes");
  RadialGrid g;
  g.s = f0.s();
  g.n = g.s.size();
  g.s_min = g.s.front();
  g.s_max = g.s.back();
  g.h = f0.spacing();
  g.stencil = num::StencilTable(g.s);
  const auto tau = g.stencil.derivative(f0.f(), 1);
  g.r.assign(g.n, 0.0);
  auto clamp = [&](double t) { return std::clamp(t, background.tau_min(), background.tau_max()); };
  for (std::size_t i = 1; i < g.n; ++i) {
    if (!(tau[i] > tau[i - 1]))
      throw InvariantViolation("make_radial_grid: tau = f0' not increasing at node " + std::to_string(i), i);
    g.r[i] = g.r[i - 1] + fiber_distance(background, clamp(tau[i - 1]), clamp(tau[i]));
  }
  return g;
}

Jets jets(const RadialGrid& grid, std::span<const double> f) {
  require_size(grid, f, "jets");
  Jets out;
  for (int k = 0; k <= 4; ++k) out[static_cast<std::size_t>(k)] = grid.stencil.derivative(f, k);
  return out;
}

Background background_from_samples(const RadialGrid& grid, std::span<const double> f) {
  return {std::vector<double>(f.begin(), f.end()), jets(grid, f)};
}

Background background_from_profile(const RadialGrid& grid, const RadialPotential& f0,
                                   const MomentumProfile& profile) {
  require_size(grid, f0.f(), "background_from_profile");
  Background out;
  out.f = f0.f();
  out.jets[0] = out.f;
  for (std::size_t k = 1; k <= 4; ++k) out.jets[k].resize(grid.n);
  const auto tau = grid.stencil.derivative(out.f, 1);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double t = std::clamp(tau[i], profile.tau_min(), profile.tau_max());
    const double p0 = profile.value(t);
    const double p1 = profile.first_derivative(t);
    const double p2 = profile.second_derivative(t);
    out.jets[1][i] = t;
    out.jets[2][i] = p0;
    out.jets[3][i] = p0 * p1;
    out.jets[4][i] = p0 * (p1 * p1 + p0 * p2);
  }
  return out;
}

Background perturbed(const RadialGrid& grid, const Background& f0, std::span<const double> chi) {
  const Jets d = jets(grid, chi);
  Background out = f0;
  for (std::size_t k = 0; k <= 4; ++k)
    for (std::size_t i = 0; i < grid.n; ++i) out.jets[k][i] += d[k][i];
  out.f = out.jets[0];
  return out;
}

std::vector<double> scalar_map(const RadialGrid& grid, const Background& f0, std::span<const double> phi,
                               const ModelParams& params) {
  params.validate();
  const Jets& a = f0.jets;
  std::optional<Jets> b;
  if (!phi.empty()) b = jets(grid, phi);
  std::vector<double> out(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) out[i] = scalar_at(point_at(a, b ? &*b : nullptr, i), params);
  return out;
}

std::vector<double> scalar_map(const RadialPotential& f, const ModelParams& params) {
  params.validate();
  const num::StencilTable table(f.s());
  Jets a;
  if (const auto rate = f.exponential_rate()) {
    // f = e^(a s) / a: the k-th derivative is a^(k-1) e^(a s).
    a[0] = f.f();
    for (std::size_t k = 1; k <= 4; ++k) {
      a[k].resize(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) a[k][i] = std::pow(*rate, static_cast<double>(k) - 1.0) * std::exp(*rate * f.s()[i]);
    }
  } else {
    for (int k = 0; k <= 4; ++k) a[static_cast<std::size_t>(k)] = table.derivative(f.f(), k);
  }
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = scalar_at(point_at(a, nullptr, i), params);
  return out;
}

std::array<std::vector<double>, 4> scalar_map_partials(const RadialGrid& grid, const Background& f0,
                                                       std::span<const double> phi, const ModelParams& params) {
  params.validate();
  const Jets& a = f0.jets;
  std::optional<Jets> b;
  if (!phi.empty()) b = jets(grid, phi);
  std::array<std::vector<double>, 4> out;
  for (auto& v : out) v.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const auto c = partials_at(point_at(a, b ? &*b : nullptr, i), params);
    for (std::size_t k = 0; k < 4; ++k) out[k][i] = c[k];
  }
  return out;
}

std::vector<double> DiscreteOperator::apply(std::span<const double> u) const {
  if (u.size() != n) throw std::invalid_argument("DiscreteOperator::apply: size mismatch");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = interior_begin(); i < interior_end(); ++i) {
    const auto& row = rows[i - kBoundaryRows];
    double acc = 0.0;
    for (std::size_t j = 0; j < kWidth; ++j) acc += row[j] * u[start[i] + j];
    out[i] = acc;
  }
  return out;
}

DiscreteOperator linearize(const RadialGrid& grid, const Background& f0, std::span<const double> phi,
                           const ModelParams& params) {
  const auto c = scalar_map_partials(grid, f0, phi, params);
  DiscreteOperator op;
  op.n = grid.n;
  op.start.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) op.start[i] = grid.stencil.window_start(i);
  for (std::size_t i = op.interior_begin(); i < op.interior_end(); ++i) {
    std::array<double, 7> row{};
    for (int k = 1; k <= 4; ++k) {
      const auto w = grid.stencil.weights(i, k);
      const double ck = c[static_cast<std::size_t>(k - 1)][i];
      for (std::size_t j = 0; j < kWidth; ++j) row[j] += ck * w[j];
    }
    op.rows.push_back(row);
  }
  return op;
}

std::vector<double> gradient_pairing(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                                     std::span<const double> u) {
  require_size(grid, u, "gradient_pairing");
  const auto s0 = scalar_map(grid, f0, {}, params);
  const auto ds = grid.stencil.derivative(s0, 1);
  const auto du = grid.stencil.derivative(u, 1);
  const auto& f2 = f0.jets[2];
  std::vector<double> out(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) out[i] = du[i] * ds[i] / f2[i];
  return out;
}

std::vector<double> lichnerowicz_apply(const RadialGrid& grid, const Background& f0,
                                       const ModelParams& params, std::span<const double> u) {
  require_size(grid, u, "lichnerowicz_apply");
  const Jets& j = f0.jets;
  const int b = params.b;
  auto laplacian = [&](const std::vector<double>& w) {
    const auto w1 = grid.stencil.derivative(w, 1);
    const auto w2 = grid.stencil.derivative(w, 2);
    std::vector<double> out(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) out[i] = radial_laplacian(j[1][i], j[2][i], w1[i], w2[i], b);
    return out;
  };
  const std::vector<double> uu(u.begin(), u.end());
  const auto bilaplacian = laplacian(laplacian(uu));
  const auto u1 = grid.stencil.derivative(uu, 1);
  const auto u2 = grid.stencil.derivative(uu, 2);
  const auto pairing = gradient_pairing(grid, f0, params, u);

  std::vector<double> out(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double tau = j[1][i];
    const double phi = j[2][i];
    const double dphi = j[3][i] / phi;
    const double ddphi = j[4][i] / (phi * phi) - j[3][i] * j[3][i] / (phi * phi * phi);
    const auto ric = ricci_at(tau, phi, dphi, ddphi, b);
    const double contraction =
        ric.fiber * u2[i] / (phi * phi) + u1[i] * (b * ric.base + params.s_base(tau)) / (tau * tau);
    out[i] = bilaplacian[i] + contraction + pairing[i];
  }
  return out;
}

double weighted_norm(const RadialGrid& grid, std::span<const double> u, double delta, int k, std::size_t begin,
                     std::size_t end, bool holder) {
  require_size(grid, u, "weighted_norm");
  if (k < 0 || k > 4) throw std::invalid_argument("weighted_norm: k must lie in 0..4");
  end = std::min(end, grid.n);
  std::vector<std::vector<double>> d;
  for (int j = 0; j <= k; ++j) d.push_back(j == 0 ? std::vector<double>(u.begin(), u.end())
                                                  : grid.stencil.derivative(u, j));
  double best = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    double local = 0.0;
    for (const auto& dj : d) local = std::max(local, std::abs(dj[i]));
    if (holder && i + 1 < end) local = std::max(local, std::abs(d.back()[i + 1] - d.back()[i]) / grid.h);
    best = std::max(best, weight(grid, i, delta) * local);
  }
  return best;
}

// ---------------------------------------------------------------------------

struct InverseOperator::Impl {
  static constexpr lapack_int kl = 4;
  static constexpr lapack_int ku = 4;
  static constexpr lapack_int ldab = 2 * kl + ku + 1;
  lapack_int n = 0;
  std::vector<double> ab;
  std::vector<lapack_int> ipiv;
  std::vector<double> row_scale;
  double rcond = 0.0;

  double& at(std::size_t i, std::size_t j) {
    return ab[static_cast<std::size_t>(kl + ku) + i - j + j * static_cast<std::size_t>(ldab)];
  }
};

InverseOperator::InverseOperator(const DiscreteOperator& op) : impl_(std::make_unique<Impl>()) {
  auto& m = *impl_;
  const std::size_t n = op.n;
  if (n < 2 * kBoundaryRows + kWidth) throw std::invalid_argument("InverseOperator: grid too small");
  m.n = static_cast<lapack_int>(n);
  m.ab.assign(static_cast<std::size_t>(Impl::ldab) * n, 0.0);
  m.ipiv.assign(n, 0);
  m.row_scale.assign(n, 1.0);

  // Dense copy of each row's band entries before scaling.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  rows[0] = {{0, -3.0}, {1, 4.0}, {2, -1.0}};            // u'(s_min) = 0
  rows[1] = {{0, 2.0}, {1, -5.0}, {2, 4.0}, {3, -1.0}};  // u''(s_min) = 0
  for (std::size_t i = op.interior_begin(); i < op.interior_end(); ++i)
    for (std::size_t j = 0; j < kWidth; ++j) rows[i].push_back({op.start[i] + j, op.rows[i - kBoundaryRows][j]});
  rows[n - 2] = {{n - 3, 1.0}, {n - 2, -4.0}, {n - 1, 3.0}};  // u'(s_max) = 0
  rows[n - 1] = {{n - 1, 1.0}};                                // u(s_max) = 0

  std::vector<double> column_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double biggest = 0.0;
    for (const auto& [j, v] : rows[i]) {
      if (!std::isfinite(v)) throw InvariantViolation("InverseOperator: non-finite entry in row " + std::to_string(i), i);
      biggest = std::max(biggest, std::abs(v));
    }
    if (!(biggest > 0.0)) throw SingularMatrixError("InverseOperator: zero row " + std::to_string(i), "band", i, kInfinity);
    m.row_scale[i] = 1.0 / biggest;
    for (const auto& [j, v] : rows[i]) {
      m.at(i, j) = v * m.row_scale[i];
      column_sum[j] += std::abs(v * m.row_scale[i]);
    }
  }
  const double anorm = *std::max_element(column_sum.begin(), column_sum.end());

  const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, m.n, m.n, Impl::kl, Impl::ku, m.ab.data(), Impl::ldab,
                                         m.ipiv.data());
  if (info > 0)
    throw SingularMatrixError("InverseOperator: exactly singular pivot " + std::to_string(info - 1), "band",
                              static_cast<std::size_t>(info - 1), kInfinity);
  if (info < 0) throw std::runtime_error("InverseOperator: invalid argument to dgbtrf");
  LAPACKE_dgbcon(LAPACK_COL_MAJOR, '1', m.n, Impl::kl, Impl::ku, m.ab.data(), Impl::ldab, m.ipiv.data(), anorm,
                 &m.rcond);
  if (!(m.rcond > 1e-15))
    throw SingularMatrixError("InverseOperator: numerically singular band (condition estimate " +
                                  std::to_string(1.0 / m.rcond) + ")",
                              "band", 0, 1.0 / m.rcond);
}

InverseOperator::~InverseOperator() = default;
InverseOperator::InverseOperator(InverseOperator&&) noexcept = default;
InverseOperator& InverseOperator::operator=(InverseOperator&&) noexcept = default;

double InverseOperator::rcond() const noexcept { return impl_->rcond; }

std::vector<double> InverseOperator::apply(std::span<const double> g) const {
  const auto& m = *impl_;
  const auto n = static_cast<std::size_t>(m.n);
  if (g.size() != n) throw std::invalid_argument("InverseOperator::apply: size mismatch");
  std::vector<double> x(n, 0.0);
  for (std::size_t i = kBoundaryRows; i + kBoundaryRows < n; ++i) x[i] = g[i] * m.row_scale[i];
  const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', m.n, Impl::kl, Impl::ku, 1, m.ab.data(), Impl::ldab,
                                         m.ipiv.data(), x.data(), m.n);
  if (info != 0) throw std::runtime_error("InverseOperator: dgbtrs failed");
  return x;
}

std::vector<double> inverse_apply(const DiscreteOperator& op, std::span<const double> g) {
  return InverseOperator(op).apply(g);
}

double default_delta(int b, double s_hat) {
  if (b < 1 || !(s_hat > 0.0)) throw std::invalid_argument("default_delta: need b >= 1 and S_hat > 0");
  const double n = b + 1.0;
  const double upper = std::min(2.0 * n, 2.0 + 2.0 * n * (n - 1.0) / s_hat);
  if (!(upper > 4.0 + 2e-3)) throw std::invalid_argument("default_delta: the admissible delta interval is empty");
  return 0.5 * (4.0 + upper);
}

// ---------------------------------------------------------------------------

std::vector<double> random_direction(const RadialGrid& grid, double delta, std::size_t modes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(modes), b(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    a[k] = normal(rng);
    b[k] = normal(rng);
  }
  const double pi = std::acos(-1.0);
  std::vector<double> p(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = (grid.s[i] - grid.s_min) / (grid.s_max - grid.s_min);
    const double window = std::pow(16.0 * x * (1.0 - x) * x * (1.0 - x), 2.0);
    double trig = 0.0;
    for (std::size_t k = 0; k < modes; ++k) {
      const double kk = static_cast<double>(k + 1);
      trig += (a[k] * std::cos(kk * pi * x) + b[k] * std::sin(kk * pi * x)) / (kk * kk);
    }
    p[i] = window * trig / weight(grid, i, delta - 4.0);
  }
  const double norm = weighted_norm(grid, p, delta - 4.0, 4);
  for (auto& v : p) v /= norm;
  return p;
}

double linearization_shift(const RadialGrid& grid, const Background& f0, std::span<const double> chi,
                           const ModelParams& params, double delta) {
  std::array<std::vector<double>, 4> moved;
  try {
    moved = scalar_map_partials(grid, f0, chi, params);
  } catch (const InvariantViolation&) {
    return kInfinity;
  }
  const auto base = scalar_map_partials(grid, f0, {}, params);
  double worst = 0.0;
  for (std::size_t i = kBoundaryRows; i + kBoundaryRows < grid.n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) sum += std::abs(moved[k][i] - base[k][i]);
    // |u^(j)| <= (r^2+1)^(-(delta-4)/2) on the unit ball, measured in C^0_delta.
    worst = std::max(worst, weight(grid, i, 4.0) * sum);
  }
  return worst;
}

namespace {

bool convex_after(const RadialGrid& grid, const Background& f0, std::span<const double> chi) {
  const auto& d1 = f0.jets[1];
  const auto& d2 = f0.jets[2];
  const auto c1 = grid.stencil.derivative(chi, 1);
  const auto c2 = grid.stencil.derivative(chi, 2);
  for (std::size_t i = 0; i < grid.n; ++i)
    if (!(d1[i] + c1[i] > 0.0) || !(d2[i] + c2[i] > 0.0)) return false;
  return true;
}

std::vector<double> scaled(std::span<const double> p, double t) {
  std::vector<double> out(p.begin(), p.end());
  for (auto& v : out) v *= t;
  return out;
}

}  // namespace

GateEstimate estimate_gate_constants(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                                     double delta, const GateOptions& options) {
  require_size(grid, f0.f, "estimate_gate_constants");
  const auto op = linearize(grid, f0, {}, params);
  const InverseOperator inv(op);
  const double pi = std::acos(-1.0);

  GateEstimate out;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t sample = 0; sample < options.k_samples; ++sample) {
    std::vector<double> c(options.modes);
    for (std::size_t k = 0; k < options.modes; ++k) c[k] = normal(rng) / static_cast<double>(k + 1);
    std::vector<double> g(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double x = (grid.s[i] - grid.s_min) / (grid.s_max - grid.s_min);
      double series = 0.0;
      for (std::size_t k = 0; k < options.modes; ++k) series += c[k] * std::cos(static_cast<double>(k) * pi * x);
      g[i] = series / weight(grid, i, delta);
    }
    const double gn = weighted_norm(grid, g, delta, 0, kBoundaryRows, grid.n - kBoundaryRows);
    if (!(gn > 0.0)) continue;
    for (auto& v : g) v /= gn;
    const auto u = inv.apply(g);
    out.max_inverse_norm = std::max(out.max_inverse_norm, weighted_norm(grid, u, delta - 4.0, 4));
  }
  if (!(out.max_inverse_norm > 0.0)) throw std::runtime_error("estimate_gate_constants: no usable samples");
  out.K_hat = 1.0 / out.max_inverse_norm;

  double c0 = kInfinity;
  for (std::size_t d = 0; d < options.c0_directions; ++d) {
    const auto p = random_direction(grid, delta, options.modes, options.seed + 1000 + d);
    auto ok = [&](double radius) {
      const auto chi = scaled(p, radius);
      return convex_after(grid, f0, chi) && linearization_shift(grid, f0, chi, params, delta) <= 0.5 * out.K_hat;
    };
    double lo = 0.0, hi = 0.0, t = 1e-3;
    if (ok(t)) {
      lo = t;
      for (int it = 0; it < 80 && ok(2.0 * lo); ++it) lo *= 2.0;
      hi = 2.0 * lo;
    } else {
      hi = t;
      for (int it = 0; it < 80; ++it) {
        t *= 0.5;
        if (ok(t)) {
          lo = t;
          break;
        }
        hi = t;
      }
      if (lo == 0.0) {
        c0 = 0.0;
        break;
      }
    }
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    c0 = std::min(c0, lo);
  }
  out.c0 = c0;
  return out;
}

// ---------------------------------------------------------------------------

PicardResult picard_solve(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                          double delta, const GateEstimate& gate, const PicardOptions& options) {
  require_size(grid, f0.f, "picard_solve");
  const std::size_t lo = kBoundaryRows;
  const std::size_t hi = grid.n - kBoundaryRows;

  PicardResult out;
  out.phi.assign(grid.n, 0.0);
  out.f = f0.f;
  auto& trace = out.trace;
  trace.delta = delta;
  trace.K_hat_est = gate.K_hat;
  trace.c0_est = gate.c0;
  trace.gate_rhs = 0.5 * gate.c0 * gate.K_hat;

  const auto s0 = scalar_map(grid, f0, {}, params);
  trace.gate_lhs = weighted_norm(grid, s0, delta, 0, lo, hi);
  if (options.enforce_gate && !(trace.gate_lhs < trace.gate_rhs)) {
    trace.status = "gate_failed";
    trace.message = "||S(f0)|| >= c0 K_hat / 2";
    return out;
  }

  const InverseOperator inv(linearize(grid, f0, {}, params));
  auto& phi = out.phi;
  bool monotone = true;
  double previous = kInfinity;
  for (std::size_t k = 0;; ++k) {
    std::vector<double> s;
    try {
      s = scalar_map(grid, f0, phi, params);
    } catch (const InvariantViolation& e) {
      trace.status = "convexity_lost";
      trace.message = e.what();
      break;
    }
    IterationRecord rec;
    rec.k = k;
    rec.residual_norm = weighted_norm(grid, s, delta, 0, lo, hi);
    if (rec.residual_norm > previous) monotone = false;
    previous = rec.residual_norm;
    if (rec.residual_norm < options.tol) {
      trace.iterations.push_back(rec);
      trace.status = monotone ? "converged" : "nonmonotone";
      break;
    }
    if (k == options.max_iter) {
      trace.iterations.push_back(rec);
      trace.status = "max_iter_exceeded";
      break;
    }
    // N(phi) = -L^{-1}(S0 + Q(phi)) = phi - L^{-1} S(f0 + phi).
    auto step = inv.apply(interior_only(grid, s));
    for (std::size_t i = 0; i < grid.n; ++i) {
      step[i] = -step[i];
      phi[i] += step[i];
    }
    rec.update_norm = weighted_norm(grid, step, delta - 4.0, 4);
    if (!trace.iterations.empty() && trace.iterations.back().update_norm > 0.0)
      trace.contraction_estimate =
          std::max(trace.contraction_estimate, rec.update_norm / trace.iterations.back().update_norm);
    trace.iterations.push_back(rec);
    if (options.enforce_ball && weighted_norm(grid, phi, delta - 4.0, 4) > gate.c0) {
      trace.status = "ball_violated";
      trace.message = "iterate left the c0-ball";
      break;
    }
  }
  for (std::size_t i = 0; i < grid.n; ++i) out.f[i] = f0.f[i] + phi[i];
  return out;
}

double contraction_probe(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                         double delta, double c0, const ProbeOptions& options) {
  const auto op = linearize(grid, f0, {}, params);
  const InverseOperator inv(op);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t pair = 0; pair < options.pairs; ++pair) {
    const auto p = random_direction(grid, delta, 8, options.seed * 7919 + 2 * pair);
    const auto q = random_direction(grid, delta, 8, options.seed * 7919 + 2 * pair + 1);
    const auto phi = scaled(p, c0 * unit(rng));
    const auto psi = scaled(q, c0 * unit(rng));
    std::vector<double> diff(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) diff[i] = phi[i] - psi[i];
    const double den = weighted_norm(grid, diff, delta - 4.0, 4);
    if (!(den > 0.0)) continue;

    std::vector<double> dq(grid.n, 0.0);
    if (!options.linear) {
      // Q(phi) - Q(psi) = S(f0+phi) - S(f0+psi) - L(phi - psi).
      const auto a = scalar_map(grid, f0, phi, params);
      const auto b = scalar_map(grid, f0, psi, params);
      const auto l = op.apply(diff);
      for (std::size_t i = kBoundaryRows; i + kBoundaryRows < grid.n; ++i) dq[i] = a[i] - b[i] - l[i];
    }
    const auto image = inv.apply(dq);
    worst = std::max(worst, weighted_norm(grid, image, delta - 4.0, 4) / den);
  }
  return worst;
}

std::vector<double> scale_to_convexity(const RadialGrid& grid, const Background& f0, std::span<const double> u,
                                       double ratio) {
  const auto second = grid.stencil.derivative(u, 2);
  double m = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) m = std::max(m, std::abs(second[i]) / f0.jets[2][i]);
  if (!(m > 0.0)) throw std::invalid_argument("scale_to_convexity: direction has no second derivative");
  std::vector<double> out(u.begin(), u.end());
  for (auto& x : out) x *= ratio / m;
  return out;
}

LinearizationCheck check_linearization(const RadialGrid& grid, const Background& f0,
                                       const ModelParams& params, std::span<const double> u,
                                       std::array<double, 2> eps) {
  const auto lu = linearize(grid, f0, {}, params).apply(u);
  LinearizationCheck out;
  out.eps = eps;
  for (std::size_t e = 0; e < 2; ++e) {
    const auto plus = scalar_map(grid, f0, scaled(u, eps[e]), params);
    const auto minus = scalar_map(grid, f0, scaled(u, -eps[e]), params);
    double worst = 0.0;
    for (std::size_t i = kBoundaryRows; i + kBoundaryRows < grid.n; ++i)
      worst = std::max(worst, std::abs((plus[i] - minus[i]) / (2.0 * eps[e]) - lu[i]));
    out.error[e] = worst;
  }
  out.order = std::log(out.error[0] / out.error[1]) / std::log(eps[0] / eps[1]);
  return out;
}

double lichnerowicz_identity_residual(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                                      std::span<const double> u, std::size_t margin) {
  const auto lu = linearize(grid, f0, {}, params).apply(u);
  const auto lich = lichnerowicz_apply(grid, f0, params, u);
  const auto pair = gradient_pairing(grid, f0, params, u);
  margin = std::max(margin, kBoundaryRows);
  double num = 0.0, den = 0.0;
  for (std::size_t i = margin; i + margin < grid.n; ++i) {
    num = std::max(num, std::abs(lu[i] + lich[i] - pair[i]));
    den = std::max(den, std::abs(lu[i]));
  }
  return den > 0.0 ? num / den : num;
}

RadialPotential scalar_flat_background(int b, double s_hat, double s_min, double s_max, std::size_t n) {
  PotentialGrid g;
  g.s_min = s_min;
  g.s_max = s_max;
  g.n = n;
  g.tau_anchor = 2.0;
  g.anchor = std::clamp(0.0, s_min, s_max);
  return profile_to_potential(scalar_flat_profile(b, s_hat), g);
}

std::vector<double> smooth_bump(const std::vector<double>& s, double center, double half_width, double amp) {
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = (s[i] - center) / half_width;
    if (std::abs(x) < 1.0) out[i] = amp * std::exp(-1.0 / (1.0 - x * x));
  }
  return out;
}

BumpSolve solve_from_bump(const RadialGrid& grid, const Background& background, const ModelParams& params,
                          double delta, const PicardOptions& options, std::optional<double> amplitude,
                          const GateOptions& gate_options) {
  const double center = 0.5 * (grid.s_min + grid.s_max);
  const double half_width = 0.25 * (grid.s_max - grid.s_min);
  BumpSolve out;
  if (amplitude) {
    out.amplitude = *amplitude;
  } else {
    const auto gate0 = estimate_gate_constants(grid, background, params, delta, gate_options);
    out.amplitude = gate0.c0 / weighted_norm(grid, smooth_bump(grid.s, center, half_width, 1.0), delta - 4.0, 4);
  }
  for (int attempt = 0; attempt < 60; ++attempt, out.amplitude *= 0.5) {
    out.start = perturbed(grid, background, smooth_bump(grid.s, center, half_width, out.amplitude));
    out.gate = estimate_gate_constants(grid, out.start, params, delta, gate_options);
    out.result = picard_solve(grid, out.start, params, delta, out.gate, options);
    if (amplitude || out.result.trace.status != "gate_failed") break;
  }
  return out;
}

std::string solve_trace_json(const SolveTrace& trace) {
  nlohmann::ordered_json j;
  j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& it : trace.iterations)
    j["iterations"].push_back({{"k", it.k}, {"residual_norm", it.residual_norm}, {"update_norm", it.update_norm}});
  j["K_hat_est"] = trace.K_hat_est;
  j["c0_est"] = trace.c0_est;
  j["delta"] = trace.delta;
  j["status"] = trace.status;
  j["gate_lhs"] = trace.gate_lhs;
  j["gate_rhs"] = trace.gate_rhs;
  j["contraction_estimate"] = trace.contraction_estimate;
  if (!trace.message.empty()) j["message"] = trace.message;
  return j.dump(2);
}

}  // namespace kahler
