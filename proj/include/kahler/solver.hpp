#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kahler/curvature.hpp"
#include "kahler/numerics.hpp"
#include "kahler/profiles.hpp"

namespace kahler {

/// Uniform s-grid of the truncated radial model together with the distance
/// r of every node from the node at s_min, measured through the background.
struct RadialGrid {
  double s_min = 0.0;
  double s_max = 0.0;
  std::size_t n = 0;
  double h = 0.0;
  std::vector<double> s;
  std::vector<double> r;
  num::StencilTable stencil;
};

/// Builds the grid of `f0` with r_i = fiber distance from tau_0 to tau_i,
/// tau_i = f0'(s_i), through `background`. Requires n >= 64.
RadialGrid make_radial_grid(const RadialPotential& f0, const MomentumProfile& background);

/// Rows 2 .. n-3 carry the scalar-curvature equation; the first and last two
/// rows of the square system are boundary conditions.
inline constexpr std::size_t kBoundaryRows = 2;

/// Derivatives 0..4 of a grid function at every node.
using Jets = std::array<std::vector<double>, 5>;

Jets jets(const RadialGrid& grid, std::span<const double> f);

/// Background potential f0 on the grid with its derivative jets. Jets of a
/// closed-form background are evaluated from the profile, so the fourth
/// derivative of a large f0 carries no finite-difference rounding.
struct Background {
  std::vector<double> f;
  Jets jets;
};

/// Jets by finite differences of the samples.
Background background_from_samples(const RadialGrid& grid, std::span<const double> f);

/// Jets from tau = f' and f'' = phi(tau), f''' = phi phi', f'''' = phi (phi'^2 + phi phi'').
Background background_from_profile(const RadialGrid& grid, const RadialPotential& f0, const MomentumProfile& profile);

/// f0 + chi, with finite-difference jets of chi added to those of f0.
Background perturbed(const RadialGrid& grid, const Background& f0, std::span<const double> chi);

/// S(omega_f) at every node, with f = f0 + phi (phi may be empty). Jets of f0
/// and phi are formed separately and summed, which keeps the rounding of a
/// large background out of a small perturbation's derivatives.
std::vector<double> scalar_map(const RadialGrid& grid, const Background& f0, std::span<const double> phi,
                               const ModelParams& params);

/// Convenience overload on a potential with its own grid.
std::vector<double> scalar_map(const RadialPotential& f, const ModelParams& params);

/// Banded linear operator on the grid: one 7-wide row per interior node.
struct DiscreteOperator {
  std::size_t n = 0;
  std::vector<std::size_t> start;                 // window start for node i (all nodes)
  std::vector<std::array<double, 7>> rows;        // rows[i - kBoundaryRows] for interior i
  std::string boundary = "inner:regular,outer:dirichlet";

  std::size_t interior_begin() const noexcept { return kBoundaryRows; }
  std::size_t interior_end() const noexcept { return n - kBoundaryRows; }

  /// Interior values of L u; boundary entries are 0.
  std::vector<double> apply(std::span<const double> u) const;
};

/// Linearization of scalar_map at f0 + phi: exact derivative of the discrete
/// map, assembled from its partials in the jets (f', f'', f''', f'''').
DiscreteOperator linearize(const RadialGrid& grid, const Background& f0, std::span<const double> phi,
                           const ModelParams& params);

/// Pointwise partial derivatives of S with respect to f', f'', f''', f''''.
std::array<std::vector<double>, 4> scalar_map_partials(const RadialGrid& grid, const Background& f0,
                                                       std::span<const double> phi, const ModelParams& params);

/// D*D u = Lap(Lap u) + Ricci contraction + (grad u, grad S), assembled from
/// the radial Laplacian, the Ricci coefficients and S(f0) samples.
std::vector<double> lichnerowicz_apply(const RadialGrid& grid, const Background& f0,
                                       const ModelParams& params, std::span<const double> u);

/// The gradient pairing (grad u, grad S(f0)) = u' S' / f0''.
std::vector<double> gradient_pairing(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                                     std::span<const double> u);

/// sup_i (r_i^2 + 1)^(delta/2) max_{j <= k} |u^(j)(s_i)| over nodes [begin, end).
/// With `holder` the max adjacent difference quotient of u^(k) joins the sup.
double weighted_norm(const RadialGrid& grid, std::span<const double> u, double delta, int k,
                     std::size_t begin = 0, std::size_t end = static_cast<std::size_t>(-1), bool holder = false);

/// Factorized square system: interior rows of L plus u' = u'' = 0 at s_min
/// and u = u' = 0 at s_max, row-equilibrated, banded LU (LAPACK).
class InverseOperator {
 public:
  explicit InverseOperator(const DiscreteOperator& op);
  ~InverseOperator();
  InverseOperator(InverseOperator&&) noexcept;
  InverseOperator& operator=(InverseOperator&&) noexcept;

  /// Solves with interior right-hand side g[2 .. n-3]; other entries ignored.
  std::vector<double> apply(std::span<const double> g) const;

  /// Reciprocal 1-norm condition estimate of the equilibrated system.
  double rcond() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> inverse_apply(const DiscreteOperator& op, std::span<const double> g);

/// Midpoint of (4, min(2n, 2 + 2n(n-1)/S_hat)) with n = b + 1.
double default_delta(int b, double s_hat);

struct GateOptions {
  std::size_t k_samples = 24;
  std::size_t c0_directions = 8;
  std::size_t modes = 8;
  std::uint64_t seed = 20240601;
};

struct GateEstimate {
  double K_hat = 0.0;
  double c0 = 0.0;
  double max_inverse_norm = 0.0;  // max sampled ||L^{-1} g|| over unit g
};

/// K_hat = 1 / max sampled ||L^{-1} g||_{C^4_{delta-4}} over unit ||g||_{C^0_delta};
/// c0 = largest sampled radius with convexity kept and the linearization
/// moving by at most K_hat / 2 in the C^4_{delta-4} -> C^0_delta norm.
GateEstimate estimate_gate_constants(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                                     double delta, const GateOptions& options = {});

/// ||L_{f0+chi} - L_{f0}|| between the weighted norms, from coefficient differences.
double linearization_shift(const RadialGrid& grid, const Background& f0, std::span<const double> chi,
                           const ModelParams& params, double delta);

struct IterationRecord {
  std::size_t k = 0;
  double residual_norm = 0.0;  // ||S(f0 + phi_k)||_{C^0_delta}
  double update_norm = 0.0;    // ||phi_{k+1} - phi_k||_{C^4_{delta-4}}
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  std::string status;  // converged, gate_failed, convexity_lost, max_iter_exceeded, ball_violated, nonmonotone
  double contraction_estimate = 0.0;  // max ratio of successive update norms
  double K_hat_est = 0.0;
  double c0_est = 0.0;
  double delta = 0.0;
  double gate_lhs = 0.0;  // ||S(f0)||_{C^0_delta}
  double gate_rhs = 0.0;  // c0 K_hat / 2
  std::string message;
};

struct PicardOptions {
  double tol = 1e-8;
  std::size_t max_iter = 50;
  bool enforce_gate = true;
  bool enforce_ball = true;
};

struct PicardResult {
  std::vector<double> f;    // f0 + phi_infinity
  std::vector<double> phi;  // phi_infinity
  SolveTrace trace;
};

/// Iterates phi_{k+1} = -L^{-1}(S(f0) + Q(phi_k)), Q(phi) = S(f0+phi) - S(f0) - L phi,
/// with L the linearization at f0.
PicardResult picard_solve(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                          double delta, const GateEstimate& gate, const PicardOptions& options = {});

struct ProbeOptions {
  std::size_t pairs = 64;
  std::uint64_t seed = 7;
  bool linear = false;  // force Q = 0
};

/// max over seeded pairs in the c0-ball of ||N(phi) - N(psi)|| / ||phi - psi||
/// in C^4_{delta-4}.
double contraction_probe(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                         double delta, double c0, const ProbeOptions& options = {});

/// Smooth random direction supported away from both ends with unit
/// C^4_{delta-4} norm; used by the gate estimate and the probe.
std::vector<double> random_direction(const RadialGrid& grid, double delta, std::size_t modes, std::uint64_t seed);

struct LinearizationCheck {
  std::array<double, 2> eps{1e-3, 5e-4};
  std::array<double, 2> error{};  // max |FD - L u| over interior rows
  double order = 0.0;
};

LinearizationCheck check_linearization(const RadialGrid& grid, const Background& f0,
                                       const ModelParams& params, std::span<const double> u,
                                       std::array<double, 2> eps = {1e-3, 5e-4});

/// u rescaled so that max |u''| / f0'' = ratio. At unit C^4_{delta-4} norm some
/// directions leave the O(eps^2) term of the directional differences below
/// rounding; at this scale the truncation term dominates.
std::vector<double> scale_to_convexity(const RadialGrid& grid, const Background& f0, std::span<const double> u,
                                       double ratio = 1.0);

/// Relative residual of L u + D*D u - (grad u, grad S) over interior rows,
/// excluding `margin` nodes at each end where one-sided stencils disagree.
double lichnerowicz_identity_residual(const RadialGrid& grid, const Background& f0, const ModelParams& params,
                                      std::span<const double> u, std::size_t margin = 5);

/// Scalar-flat background potential sampled on [s_min, s_max]; tau = 2 at s = 0.
RadialPotential scalar_flat_background(int b, double s_hat, double s_min, double s_max, std::size_t n);

/// Compactly supported C-infinity bump amp * exp(-1/(1-x^2)), x = (s - center)/half_width.
std::vector<double> smooth_bump(const std::vector<double>& s, double center, double half_width, double amp);

struct BumpSolve {
  double amplitude = 0.0;  // bump amplitude actually used
  Background start;        // background + bump
  GateEstimate gate;       // measured at the start
  PicardResult result;
};

/// Perturbs `background` by a mid-domain bump (half-width a quarter of the
/// domain) and runs picard_solve. Without an explicit amplitude the bump
/// starts at the background's c0-ball radius and is halved until the gate
/// measured at the perturbed start passes.
BumpSolve solve_from_bump(const RadialGrid& grid, const Background& background, const ModelParams& params,
                          double delta, const PicardOptions& options = {},
                          std::optional<double> amplitude = std::nullopt, const GateOptions& gate_options = {});

/// {"iterations": [...], "K_hat_est", "c0_est", "delta", "status", ...}
std::string solve_trace_json(const SolveTrace& trace);

}  // namespace kahler
