#include "kahler/checks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "json.hpp"
#include "kahler/blockmat.hpp"
#include "kahler/curvature.hpp"
#include "kahler/errors.hpp"
#include "kahler/geometry.hpp"
#include "kahler/numerics.hpp"
#include "kahler/profiles.hpp"
#include "kahler/solver.hpp"

namespace kahler::checks {

Verdict within(std::string check, double expected, double measured, double tolerance) {
  return {std::move(check), expected, measured, tolerance, std::abs(measured - expected) <= tolerance};
}

Verdict at_most(std::string check, double measured, double bound) {
  return {std::move(check), 0.0, measured, bound, measured <= bound};
}

Verdict at_least(std::string check, double measured, double floor) {
  return {std::move(check), floor, measured, 0.0, measured >= floor};
}

Verdict holds(std::string check, bool ok) { return {std::move(check), 1.0, ok ? 1.0 : 0.0, 0.0, ok}; }

bool Criterion::pass() const {
  return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::uint64_t derive_seed(std::uint64_t root, int check_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(check_id)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

std::string label(const char* fmt, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

// The sixteen (b, S_hat) pairs of the closed-form family.
std::vector<std::pair<int, double>> closed_form_family() {
  std::vector<std::pair<int, double>> out;
  for (int b = 1; b <= 4; ++b)
    for (double s : {0.0, 1.0, 3.0, static_cast<double>(b * (b + 1))}) out.emplace_back(b, s);
  return out;
}

}  // namespace

Criterion closed_form_scalar_flat() {
  Criterion c{1, "closed-form scalar-flatness", {}};
  const auto tau = num::logspace(1.0, 1e3, 400);
  for (const auto& [b, s_hat] : closed_form_family()) {
    const auto phi = scalar_flat_profile(b, s_hat);
    const auto params = ModelParams::cscK(b, s_hat);
    double closed = 0.0, trace = 0.0;
    for (double t : tau) {
      closed = std::max(closed, std::abs(scalar_curvature_at(phi, params, t)));
      trace = std::max(trace, std::abs(scalar_curvature_trace_form(phi, params, t)));
    }
    c.verdicts.push_back(at_most(label("sup|S| b=%g S_hat=%g", b, s_hat), closed, 1e-10));
    c.verdicts.push_back(at_most(label("sup|S| trace form b=%g S_hat=%g", b, s_hat), trace, 1e-10));
  }
  return c;
}

Criterion boundary_conditions() {
  Criterion c{2, "boundary conditions at tau = 1", {}};
  for (const auto& [b, s_hat] : closed_form_family()) {
    const auto phi = scalar_flat_profile(b, s_hat);
    c.verdicts.push_back(within(label("phi(1) b=%g S_hat=%g", b, s_hat), 0.0, phi.value(1.0), 1e-12));
    c.verdicts.push_back(
        within(label("phi'(1) b=%g S_hat=%g", b, s_hat), 1.0, phi.first_derivative(1.0), 1e-12));
  }
  return c;
}

Criterion ode_vs_closed_form() {
  Criterion c{3, "prescribed-curvature ODE against closed form", {}};
  for (const auto& [b, s_hat] : closed_form_family()) {
    const auto sol = solve_prescribed_scalar(ModelParams::cscK(b, s_hat), [](double) { return 0.0; }, 100.0, 10000);
    const auto exact = scalar_flat_profile(b, s_hat);
    double worst = 0.0;
    for (std::size_t i = 1; i < sol.tau.size(); ++i) {
      const double e = exact.value(sol.tau[i]);
      worst = std::max(worst, std::abs(sol.phi[i] - e) / std::abs(e));
    }
    if (sol.truncated) worst = kInfinity;
    c.verdicts.push_back(at_most(label("max relative error b=%g S_hat=%g", b, s_hat), worst, 1e-6));
  }
  return c;
}

Criterion volume_growth_law() {
  Criterion c{4, "volume growth exponents", {}};
  for (const auto& [b, s_hat] : closed_form_family()) {
    const double expected = s_hat > 0.0 ? 2.0 * (b + 1) : 2.0;
    const auto g = volume_growth(scalar_flat_profile(b, s_hat), b, expected);
    c.verdicts.push_back(within(label("volume exponent b=%g S_hat=%g", b, s_hat), expected, g.fit.exponent,
                                0.02 * expected));
  }
  for (int n = 2; n <= 4; ++n) {
    const double expected = 2.0 * n;
    const auto g = volume_growth(exponential_profile(n - 1, 3.0), n - 1, expected);
    c.verdicts.push_back(
        within(label("exponential model volume exponent n=%g S_hat=%g", n, 3.0), expected, g.fit.exponent,
               0.02 * expected));
  }
  return c;
}

Criterion distance_norm_law() {
  Criterion c{5, "distance laws", {}};
  for (const auto& [b, s_hat] : closed_form_family()) {
    const auto phi = scalar_flat_profile(b, s_hat);
    if (s_hat > 0.0) {
      const double expected = s_hat / (b * (b + 1.0));
      const auto g = distance_norm_growth(phi, expected);
      c.verdicts.push_back(within(label("distance vs |xi| exponent b=%g S_hat=%g", b, s_hat), expected,
                                  g.fit.exponent, 0.02 * expected));
    } else {
      const double expected = 2.0 / (b + 1.0);
      const auto g = tau_distance_growth(phi, expected);
      c.verdicts.push_back(within(label("tau vs distance exponent b=%g S_hat=%g", b, s_hat), expected,
                                  g.fit.exponent, 0.02 * expected));
    }
  }
  return c;
}

Criterion decay_law() {
  Criterion c{6, "decay of S in the model", {}};
  for (const auto& [n, s_hat] : std::vector<std::pair<int, double>>{{3, 3.0}, {3, 2.0}, {4, 4.0}}) {
    const auto d = decay_experiment(n, s_hat, 1e-2);
    c.verdicts.push_back(
        within(label("decay slope n=%g S_hat=%g", n, s_hat), d.expected, d.fit.exponent, 0.03 * std::abs(d.expected)));
  }
  c.verdicts.push_back(holds("epsilon = 0 gives S identically 0", decay_experiment(3, 3.0, 0.0).exactly_flat));
  return c;
}

Criterion barrier_estimate() {
  Criterion c{7, "barrier estimate", {}};
  const auto tau = num::logspace(1.0, 1e6, 200);
  for (const auto& [n, s_hat] : std::vector<std::pair<int, double>>{{3, 3.0}, {4, 4.0}, {5, 2.0}}) {
    double gap = 0.0;
    bool negative = true;
    for (int k = 1; k < 10; ++k) {
      const double delta = 2.0 + (2.0 * n - 4.0) * k / 10.0;
      const auto r = barrier_check(n, s_hat, delta, tau);
      gap = std::max(gap, r.max_relative_gap);
      negative = negative && r.max_lhs < 0.0;
    }
    c.verdicts.push_back(at_most(label("relative gap to the bound n=%g S_hat=%g", n, s_hat), gap, 1e-8));
    c.verdicts.push_back(holds(label("strictly negative on (2, 2n-2) n=%g S_hat=%g", n, s_hat), negative));

    // At delta = 2n-2 the two terms of the Laplacian cancel; compare with one of them.
    const double delta = 2.0 * n - 2.0;
    const double a = s_hat / (n * (n - 1.0));
    const double k = 0.5 * a * delta;
    const auto r = barrier_check(n, s_hat, delta, tau);
    double worst = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const double term = (n - 1.0) * k * std::pow(tau[i], -0.5 * delta) / tau[i];
      worst = std::max(worst, std::abs(r.lhs[i]) / term);
    }
    c.verdicts.push_back(at_most(label("vanishes at delta = 2n-2 n=%g S_hat=%g", n, s_hat), worst, 1e-12));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Block identities against LAPACK's dense LU.

namespace {

template <class T>
struct Dense {
  // Column-major LU of an m x m matrix.
  std::vector<T> lu;
  std::vector<lapack_int> ipiv;
  lapack_int m = 0;
  double rcond = 0.0;
  bool ok = false;
};

double norm1_colmajor(const std::vector<double>& a, lapack_int m) {
  double best = 0.0;
  for (lapack_int j = 0; j < m; ++j) {
    double s = 0.0;
    for (lapack_int i = 0; i < m; ++i) s += std::abs(a[i + j * m]);
    best = std::max(best, s);
  }
  return best;
}

double norm1_colmajor(const std::vector<std::complex<double>>& a, lapack_int m) {
  double best = 0.0;
  for (lapack_int j = 0; j < m; ++j) {
    double s = 0.0;
    for (lapack_int i = 0; i < m; ++i) s += std::abs(a[i + j * m]);
    best = std::max(best, s);
  }
  return best;
}

template <class T>
std::vector<T> to_colmajor(const Matrix<T>& a) {
  std::vector<T> out(a.rows() * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i + j * a.rows()] = a(i, j);
  return out;
}

Dense<double> factor(const Matrix<double>& a) {
  Dense<double> d;
  d.m = static_cast<lapack_int>(a.rows());
  d.lu = to_colmajor(a);
  d.ipiv.assign(a.rows(), 0);
  const double anorm = norm1_colmajor(d.lu, d.m);
  if (LAPACKE_dgetrf(LAPACK_COL_MAJOR, d.m, d.m, d.lu.data(), d.m, d.ipiv.data()) != 0) return d;
  LAPACKE_dgecon(LAPACK_COL_MAJOR, '1', d.m, d.lu.data(), d.m, anorm, &d.rcond);
  d.ok = true;
  return d;
}

Dense<std::complex<double>> factor(const Matrix<std::complex<double>>& a) {
  Dense<std::complex<double>> d;
  d.m = static_cast<lapack_int>(a.rows());
  d.lu = to_colmajor(a);
  d.ipiv.assign(a.rows(), 0);
  const double anorm = norm1_colmajor(d.lu, d.m);
  if (LAPACKE_zgetrf(LAPACK_COL_MAJOR, d.m, d.m, d.lu.data(), d.m, d.ipiv.data()) != 0) return d;
  LAPACKE_zgecon(LAPACK_COL_MAJOR, '1', d.m, d.lu.data(), d.m, anorm, &d.rcond);
  d.ok = true;
  return d;
}

template <class T>
T dense_det(const Dense<T>& d) {
  T det{1.0};
  for (lapack_int i = 0; i < d.m; ++i) {
    det *= d.lu[i + i * d.m];
    if (d.ipiv[i] != i + 1) det = -det;
  }
  return det;
}

Matrix<double> dense_inverse(Dense<double> d) {
  LAPACKE_dgetri(LAPACK_COL_MAJOR, d.m, d.lu.data(), d.m, d.ipiv.data());
  Matrix<double> out(d.m, d.m);
  for (lapack_int i = 0; i < d.m; ++i)
    for (lapack_int j = 0; j < d.m; ++j) out(i, j) = d.lu[i + j * d.m];
  return out;
}

Matrix<std::complex<double>> dense_inverse(Dense<std::complex<double>> d) {
  LAPACKE_zgetri(LAPACK_COL_MAJOR, d.m, d.lu.data(), d.m, d.ipiv.data());
  Matrix<std::complex<double>> out(d.m, d.m);
  for (lapack_int i = 0; i < d.m; ++i)
    for (lapack_int j = 0; j < d.m; ++j) out(i, j) = d.lu[i + j * d.m];
  return out;
}

template <class T>
T draw(std::mt19937_64& rng, std::uniform_real_distribution<double>& u) {
  if constexpr (std::is_same_v<T, double>) {
    return u(rng);
  } else {
    const double re = u(rng);
    return {re, u(rng)};
  }
}

struct BlockErrors {
  double det = 0.0;
  double inverse = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

template <class T>
BlockErrors block_errors(std::uint64_t seed, std::size_t instances) {
  constexpr double kMaxCondition = 1e8;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  BlockErrors out;
  while (out.accepted < instances) {
    const auto p = static_cast<std::size_t>(size(rng));
    const auto q = static_cast<std::size_t>(size(rng));
    Matrix<T> t(p + q, p + q);
    for (std::size_t i = 0; i < p + q; ++i)
      for (std::size_t j = 0; j < p + q; ++j) t(i, j) = draw<T>(rng, entry);
    const auto blocks = Block2x2<T>::partition(t, p);

    const auto ft = factor(t);
    const auto fa = factor(blocks.A);
    if (!ft.ok || !fa.ok || 1.0 / ft.rcond > kMaxCondition || 1.0 / fa.rcond > kMaxCondition) {
      ++out.rejected;
      continue;
    }
    const auto t_inv = dense_inverse(ft);
    // S^{-1} is the lower-right block of T^{-1}; S from the oracle's A^{-1}.
    const auto a_inv = dense_inverse(fa);
    const Matrix<T> s = blocks.D - blocks.C * (a_inv * blocks.B);
    const auto s_inv = Block2x2<T>::partition(t_inv, p).D;
    if (s.norm1() * s_inv.norm1() > kMaxCondition) {
      ++out.rejected;
      continue;
    }
    ++out.accepted;

    const T det_ref = dense_det(ft);
    const T det = schur_det(blocks);
    out.det = std::max(out.det, std::abs(det - det_ref) / std::abs(det_ref));

    const auto inv = block_inverse(blocks).assemble();
    out.inverse = std::max(out.inverse, (inv - t_inv).max_abs() / t_inv.max_abs());
  }
  return out;
}

}  // namespace

Criterion block_identities(std::uint64_t seed, std::size_t instances) {
  Criterion c{8, "block determinant and inverse", {}};
  const auto real = block_errors<double>(seed, instances);
  const auto cplx = block_errors<std::complex<double>>(seed ^ 0x9e3779b97f4a7c15ULL, instances);
  c.verdicts.push_back(at_most("real Schur determinant relative error", real.det, 1e-10));
  c.verdicts.push_back(at_most("real block inverse relative error", real.inverse, 1e-10));
  c.verdicts.push_back(at_most("complex Schur determinant relative error", cplx.det, 1e-10));
  c.verdicts.push_back(at_most("complex block inverse relative error", cplx.inverse, 1e-10));
  return c;
}

// ---------------------------------------------------------------------------
// Radial solver criteria.

namespace {

struct SolverSetup {
  MomentumProfile profile;
  ModelParams params;
  RadialGrid grid;
  Background background;
  double delta;
};

SolverSetup make_setup(const SuiteConfig& cfg) {
  auto profile = scalar_flat_profile(cfg.solver_b, cfg.solver_s_hat);
  const auto f0 = scalar_flat_background(cfg.solver_b, cfg.solver_s_hat, cfg.solver_s_min, cfg.solver_s_max,
                                         cfg.solver_n);
  auto grid = make_radial_grid(f0, profile);
  auto background = background_from_profile(grid, f0, profile);
  return {std::move(profile), ModelParams::cscK(cfg.solver_b, cfg.solver_s_hat), std::move(grid),
          std::move(background), default_delta(cfg.solver_b, cfg.solver_s_hat)};
}

}  // namespace

Criterion linearization_consistency(const SuiteConfig& cfg) {
  Criterion c{9, "linearization consistency", {}};
  const auto st = make_setup(cfg);
  const auto u = scale_to_convexity(st.grid, st.background,
                                    random_direction(st.grid, st.delta, 8, derive_seed(cfg.seed, 9)));
  const auto lin = check_linearization(st.grid, st.background, st.params, u);
  c.verdicts.push_back(at_least("observed order of directional differences", lin.order, 1.9));
  const double identity = lichnerowicz_identity_residual(st.grid, st.background, st.params, u);
  c.verdicts.push_back(at_most("L u + D*D u - pairing, relative", identity, 1e-4));
  return c;
}

Criterion fixed_point(const SuiteConfig& cfg) {
  Criterion c{10, "fixed point", {}};
  const auto st = make_setup(cfg);
  const auto& grid = st.grid;
  PicardOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  const auto run = solve_from_bump(grid, st.background, st.params, st.delta, opts);
  const auto& start = run.start;
  const auto& gate = run.gate;
  const auto& result = run.result;
  c.verdicts.push_back(holds("picard_solve converged", result.trace.status == "converged"));

  const auto final_s = scalar_map(grid, start, result.phi, st.params);
  double sup = 0.0;
  for (std::size_t i = kBoundaryRows; i + kBoundaryRows < grid.n; ++i) sup = std::max(sup, std::abs(final_s[i]));
  c.verdicts.push_back(at_most("final sup|S|", sup, 1e-8));

  // Recovered profile: phi(tau) = f'' against the closed form at tau = f'.
  const auto solved = perturbed(grid, start, result.phi);
  double profile_error = 0.0;
  for (std::size_t i = kBoundaryRows; i + kBoundaryRows < grid.n; ++i) {
    const double exact = st.profile.value(solved.jets[1][i]);
    profile_error = std::max(profile_error, std::abs(solved.jets[2][i] - exact) / exact);
  }
  c.verdicts.push_back(at_most("recovered profile relative error", profile_error, 1e-6));

  ProbeOptions probe;
  probe.pairs = cfg.probe_pairs;
  probe.seed = derive_seed(cfg.seed, 10);
  const double ratio = contraction_probe(grid, start, st.params, st.delta, gate.c0, probe);
  c.verdicts.push_back(at_most("contraction probe ratio", ratio, 0.55));
  return c;
}

Criterion sobolev_scaling() {
  Criterion c{11, "Sobolev ratio under scaling", {}};
  std::vector<double> lambdas;
  for (int i = 0; i <= 16; ++i) lambdas.push_back(std::pow(2.0, -2.0 + 0.25 * i));
  const auto sweep = sobolev_scaling_sweep(3, 3.0, lambdas);
  c.verdicts.push_back(at_most("max ratio / median", sweep.max_over_median, 1.2));
  c.verdicts.push_back(at_most("median / min ratio", 1.0 / sweep.min_over_median, 1.2));
  return c;
}

// ---------------------------------------------------------------------------

namespace {

template <class F>
Criterion guarded(int id, const char* name, F&& run) {
  try {
    return run();
  } catch (const std::exception& e) {
    Criterion c{id, name, {}};
    c.verdicts.push_back(holds(std::string("completed without error: ") + e.what(), false));
    return c;
  }
}

nlohmann::ordered_json verdict_object(const Verdict& v) {
  nlohmann::ordered_json j;
  j["check"] = v.check;
  j["expected"] = v.expected;
  j["measured"] = v.measured;
  j["tolerance"] = v.tolerance;
  j["pass"] = v.pass;
  return j;
}

nlohmann::ordered_json criteria_array(const std::vector<Criterion>& criteria) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : criteria) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["name"] = c.name;
    j["pass"] = c.pass();
    j["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : c.verdicts) j["verdicts"].push_back(verdict_object(v));
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace

std::vector<Criterion> run_core(const SuiteConfig& config) {
  std::vector<Criterion> out;
  out.push_back(guarded(1, "closed-form scalar-flatness", closed_form_scalar_flat));
  out.push_back(guarded(2, "boundary conditions at tau = 1", boundary_conditions));
  out.push_back(guarded(3, "prescribed-curvature ODE against closed form", ode_vs_closed_form));
  out.push_back(guarded(4, "volume growth exponents", volume_growth_law));
  out.push_back(guarded(5, "distance laws", distance_norm_law));
  out.push_back(guarded(6, "decay of S in the model", decay_law));
  out.push_back(guarded(7, "barrier estimate", barrier_estimate));
  out.push_back(guarded(8, "block determinant and inverse",
                        [&] { return block_identities(derive_seed(config.seed, 8), config.blockmat_instances); }));
  out.push_back(guarded(9, "linearization consistency", [&] { return linearization_consistency(config); }));
  out.push_back(guarded(10, "fixed point", [&] { return fixed_point(config); }));
  out.push_back(guarded(11, "Sobolev ratio under scaling", sobolev_scaling));
  return out;
}

std::vector<Criterion> run_all(const SuiteConfig& config) {
  auto out = run_core(config);
  const auto first = criteria_array(out).dump();
  const auto second = criteria_array(run_core(config)).dump();
  Criterion c{12, "determinism", {}};
  c.verdicts.push_back(holds("rerun with the same seed is byte-identical", first == second));
  out.push_back(std::move(c));
  return out;
}

std::string to_json(const std::vector<Criterion>& criteria, const SuiteConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["pass"] = std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass(); });
  j["criteria"] = criteria_array(criteria);
  return j.dump(2) + "\n";
}

std::string verdict_json(const Verdict& v) { return verdict_object(v).dump(2) + "\n"; }

}  // namespace kahler::checks
