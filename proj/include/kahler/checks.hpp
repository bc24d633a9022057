#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kahler::checks {

/// One measured quantity against its target. For two-sided checks pass means
/// |measured - expected| <= tolerance; bound checks report expected = 0 and
/// pass when measured stays within tolerance; minimum checks use expected as
/// the floor and tolerance = 0.
struct Verdict {
  std::string check;
  double expected = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

Verdict within(std::string check, double expected, double measured, double tolerance);
Verdict at_most(std::string check, double measured, double bound);
Verdict at_least(std::string check, double measured, double floor);
Verdict holds(std::string check, bool ok);

struct Criterion {
  int id = 0;
  std::string name;
  std::vector<Verdict> verdicts;

  bool pass() const;
};

struct SuiteConfig {
  std::uint64_t seed = 20240601;
  // Radial solver grid for criteria 9 and 10.
  int solver_b = 2;
  double solver_s_hat = 3.0;
  double solver_s_min = 0.0;
  double solver_s_max = 10.0;
  std::size_t solver_n = 512;
  double tol = 1e-8;
  std::size_t max_iter = 50;
  std::size_t probe_pairs = 64;
  std::size_t blockmat_instances = 1000;
};

/// Per-check seed derived from the root seed.
std::uint64_t derive_seed(std::uint64_t root, int check_id);

Criterion closed_form_scalar_flat();
Criterion boundary_conditions();
Criterion ode_vs_closed_form();
Criterion volume_growth_law();
Criterion distance_norm_law();
Criterion decay_law();
Criterion barrier_estimate();
Criterion block_identities(std::uint64_t seed, std::size_t instances);
Criterion linearization_consistency(const SuiteConfig& config);
Criterion fixed_point(const SuiteConfig& config);
Criterion sobolev_scaling();

/// Criteria 1..11 in order.
std::vector<Criterion> run_core(const SuiteConfig& config);

/// Criteria 1..11, then criterion 12, which reruns 1..11 and compares the
/// serialized verdicts byte for byte.
std::vector<Criterion> run_all(const SuiteConfig& config);

/// {"seed": ..., "pass": ..., "criteria": [{"id", "name", "pass", "verdicts": [...]}]}
std::string to_json(const std::vector<Criterion>& criteria, const SuiteConfig& config);

/// {"check", "expected", "measured", "tolerance", "pass"}
std::string verdict_json(const Verdict& v);

}  // namespace kahler::checks
