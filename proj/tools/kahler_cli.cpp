// kahler: batch front end. Each subcommand writes its artifacts and a
// manifest to <output-dir>/<subcommand>/ and exits 0 (checks pass),
// 1 (a check failed, files still written) or 2 (invalid input).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kahler/checks.hpp"
#include "kahler/curvature.hpp"
#include "kahler/errors.hpp"
#include "kahler/geometry.hpp"
#include "kahler/numerics.hpp"
#include "kahler/profiles.hpp"
#include "kahler/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace kahler;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInvalid = 2;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects files for one subcommand run and writes the manifest last.
class Artifacts {
 public:
  Artifacts(const fs::path& root, const CLI::App& sub, std::uint64_t seed)
      : name_(sub.get_name()), dir_(root / name_) {
    fs::create_directories(dir_);
    config_["seed"] = seed;
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_name() == "--help") continue;
      const std::string key = opt->get_single_name();
      if (opt->count() > 0) {
        config_[key] = opt->as<std::string>();
      } else if (opt->get_type_size() == 0) {
        config_[key] = false;
      } else {
        config_[key] = opt->get_default_str();
      }
    }
  }

  std::ostream& open(const std::string& file) {
    files_.push_back(file);
    streams_.emplace_back(dir_ / file, std::ios::binary);
    if (!streams_.back()) throw std::runtime_error("cannot write " + (dir_ / file).string());
    return streams_.back();
  }

  void write(const std::string& file, const std::string& text) { open(file) << text; }

  int finish(bool pass) {
    ordered_json m;
    m["subcommand"] = name_;
    m["config"] = config_;
    m["files"] = files_;
    m["pass"] = pass;
    for (auto& s : streams_) s.close();
    std::ofstream(dir_ / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
    return pass ? kPass : kFail;
  }

 private:
  std::string name_;
  fs::path dir_;
  ordered_json config_ = ordered_json::object();
  std::vector<std::string> files_;
  std::vector<std::ofstream> streams_;
};

std::string verdicts_json(const std::vector<checks::Verdict>& vs) {
  auto arr = ordered_json::array();
  for (const auto& v : vs) arr.push_back(ordered_json::parse(checks::verdict_json(v)));
  return arr.dump(2) + "\n";
}

bool all_pass(const std::vector<checks::Verdict>& vs) {
  for (const auto& v : vs)
    if (!v.pass) return false;
  return true;
}

void report(const std::vector<checks::Verdict>& vs) {
  for (const auto& v : vs)
    std::printf("%s  %s  measured %.6g  expected %.6g  tolerance %.3g\n", v.pass ? "PASS" : "FAIL", v.check.c_str(),
                v.measured, v.expected, v.tolerance);
}

MomentumProfile family_profile(const std::string& family, int b, double s_hat) {
  if (family == "scalar-flat") return scalar_flat_profile(b, s_hat);
  if (family == "exponential") return exponential_profile(b, s_hat);
  throw std::invalid_argument("unknown family '" + family + "' (scalar-flat, exponential)");
}

struct GridArgs {
  int b = 2;
  double s_hat = 3.0;
  double s_min = 0.0;
  double s_max = 10.0;
  std::size_t n = 512;
  std::optional<double> delta;
};

void add_grid_options(CLI::App* sub, GridArgs& g) {
  sub->add_option("--b", g.b, "Complex dimension of the base")->check(CLI::PositiveNumber);
  sub->add_option("--s-hat", g.s_hat, "Mean scalar curvature of the base");
  sub->add_option("--s-min", g.s_min, "Inner end of the s-grid");
  sub->add_option("--s-max", g.s_max, "Outer end of the s-grid");
  sub->add_option("--N", g.n, "Grid nodes")->check(CLI::Range(64, 1 << 20));
  sub->add_option("--delta", g.delta, "Weight exponent (default: midpoint of the admissible interval)");
}

struct SolverSetup {
  MomentumProfile profile;
  ModelParams params;
  RadialGrid grid;
  Background background;
  double delta;
};

SolverSetup make_setup(const GridArgs& g) {
  auto profile = scalar_flat_profile(g.b, g.s_hat);
  const auto f0 = scalar_flat_background(g.b, g.s_hat, g.s_min, g.s_max, g.n);
  auto grid = make_radial_grid(f0, profile);
  auto bg = background_from_profile(grid, f0, profile);
  const double delta = g.delta ? *g.delta : default_delta(g.b, g.s_hat);
  return {std::move(profile), ModelParams::cscK(g.b, g.s_hat), std::move(grid), std::move(bg), delta};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalar-flat Kahler metrics in the radial model: experiments and checks"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command-line flags take precedence");

  std::string output_dir = "out";
  std::uint64_t seed = 20240601;
  app.add_option("--output-dir", output_dir, "Root directory for artifacts");
  app.add_option("--seed", seed, "Root seed for randomized operations");

  // profile -----------------------------------------------------------------
  struct {
    int b = 2;
    double s_hat = 1.0;
    std::string family = "scalar-flat";
    double tau_max = 10.0;
    std::size_t points = 91;
  } prof;
  auto* profile = app.add_subcommand("profile", "Sample a closed-form momentum profile");
  profile->add_option("--b", prof.b)->check(CLI::PositiveNumber);
  profile->add_option("--s-hat", prof.s_hat);
  profile->add_option("--family", prof.family)->check(CLI::IsMember({"scalar-flat", "exponential"}));
  profile->add_option("--tau-max", prof.tau_max);
  profile->add_option("--points", prof.points)->check(CLI::Range(2, 10000000));

  // curvature ---------------------------------------------------------------
  struct {
    int b = 2;
    double s_hat = 1.0;
    double base_s_hat = std::nan("");
    std::string family = "scalar-flat";
    double tau_max = 1e3;
    std::size_t points = 200;
  } curv;
  auto* curvature = app.add_subcommand("curvature", "Scalar and Ricci curvature of a profile");
  curvature->add_option("--b", curv.b)->check(CLI::PositiveNumber);
  curvature->add_option("--s-hat", curv.s_hat, "Profile parameter");
  curvature->add_option("--base-s-hat", curv.base_s_hat, "S_base of the model (default: --s-hat)");
  curvature->add_option("--family", curv.family)->check(CLI::IsMember({"scalar-flat", "exponential"}));
  curvature->add_option("--tau-max", curv.tau_max);
  curvature->add_option("--points", curv.points)->check(CLI::Range(2, 10000000));

  // ode ---------------------------------------------------------------------
  struct {
    int b = 2;
    double s_hat = 1.0;
    double tau_max = 100.0;
    std::size_t n = 10000;
  } ode;
  auto* ode_cmd = app.add_subcommand("ode", "Prescribed-curvature ODE with sigma = 0 against the closed form");
  ode_cmd->add_option("--b", ode.b)->check(CLI::PositiveNumber);
  ode_cmd->add_option("--s-hat", ode.s_hat);
  ode_cmd->add_option("--tau-max", ode.tau_max);
  ode_cmd->add_option("--N", ode.n)->check(CLI::Range(8, 100000000));

  // growth ------------------------------------------------------------------
  struct {
    int b = 2;
    double s_hat = 1.0;
  } grow;
  auto* growth = app.add_subcommand("growth", "Volume and distance growth exponents");
  growth->add_option("--b", grow.b)->check(CLI::PositiveNumber);
  growth->add_option("--s-hat", grow.s_hat)->check(CLI::NonNegativeNumber);

  // decay -------------------------------------------------------------------
  struct {
    int n = 3;
    double s_hat = 3.0;
    double epsilon = 1e-2;
  } dec;
  auto* decay = app.add_subcommand("decay", "Decay of S for a perturbed base in the exponential model");
  decay->add_option("--n", dec.n)->check(CLI::Range(2, 64));
  decay->add_option("--s-hat", dec.s_hat)->check(CLI::PositiveNumber);
  decay->add_option("--epsilon", dec.epsilon);

  // barrier -----------------------------------------------------------------
  struct {
    int n = 3;
    double s_hat = 3.0;
    double delta = 3.0;
  } bar;
  auto* barrier = app.add_subcommand("barrier", "Laplacian of the barrier against the closed-form bound");
  barrier->add_option("--n", bar.n)->check(CLI::Range(2, 64));
  barrier->add_option("--s-hat", bar.s_hat)->check(CLI::PositiveNumber);
  barrier->add_option("--delta", bar.delta)->check(CLI::PositiveNumber);

  // sobolev -----------------------------------------------------------------
  struct {
    int n = 3;
    double s_hat = 3.0;
    double lambda_min = 0.25;
    double lambda_max = 4.0;
    std::size_t count = 17;
  } sob;
  auto* sobolev = app.add_subcommand("sobolev", "Sobolev ratio over a scaling family");
  sobolev->add_option("--n", sob.n)->check(CLI::Range(2, 64));
  sobolev->add_option("--s-hat", sob.s_hat)->check(CLI::PositiveNumber);
  sobolev->add_option("--lambda-min", sob.lambda_min)->check(CLI::PositiveNumber);
  sobolev->add_option("--lambda-max", sob.lambda_max)->check(CLI::PositiveNumber);
  sobolev->add_option("--count", sob.count)->check(CLI::Range(2, 100000));

  // blockmat-selftest -------------------------------------------------------
  std::size_t instances = 1000;
  auto* blockmat = app.add_subcommand("blockmat-selftest", "Block determinant and inverse against dense LU");
  blockmat->add_option("--instances", instances)->check(CLI::Range(1, 10000000));

  // solve -------------------------------------------------------------------
  GridArgs sg;
  std::optional<double> amplitude;
  double tol = 1e-8;
  std::size_t max_iter = 50;
  auto* solve = app.add_subcommand("solve", "Picard iteration from a perturbed scalar-flat background");
  add_grid_options(solve, sg);
  solve->add_option("--amplitude", amplitude, "Bump amplitude (default: largest passing the gate)");
  solve->add_option("--tol", tol)->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", max_iter);

  // probe -------------------------------------------------------------------
  GridArgs pg;
  std::size_t pairs = 64;
  bool linear = false;
  auto* probe = app.add_subcommand("probe", "Contraction probe in the measured c0-ball");
  add_grid_options(probe, pg);
  probe->add_option("--pairs", pairs)->check(CLI::Range(1, 100000));
  probe->add_flag("--linear", linear, "Force Q = 0");

  // verify-all --------------------------------------------------------------
  checks::SuiteConfig suite;
  auto* verify = app.add_subcommand("verify-all", "Run every acceptance check");
  verify->add_option("--N", suite.solver_n, "Solver grid nodes")->check(CLI::Range(64, 1 << 20));
  verify->add_option("--s-max", suite.solver_s_max, "Solver grid outer end");
  verify->add_option("--instances", suite.blockmat_instances, "Block identity instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInvalid;
  }

  const fs::path root(output_dir);
  try {
    if (profile->parsed()) {
      Artifacts out(root, *profile, seed);
      const auto phi = family_profile(prof.family, prof.b, prof.s_hat);
      const double lo = std::max(1.0, phi.tau_min());
      if (!(prof.tau_max > lo)) throw std::invalid_argument("--tau-max must exceed the inner end of the profile");
      write_profile_csv(out.open("profile.csv"), num::linspace(lo, prof.tau_max, prof.points), phi);
      out.write("profile.json", closed_form_json(phi) + "\n");
      return out.finish(true);
    }

    if (curvature->parsed()) {
      Artifacts out(root, *curvature, seed);
      const auto phi = family_profile(curv.family, curv.b, curv.s_hat);
      const double base = std::isnan(curv.base_s_hat) ? curv.s_hat : curv.base_s_hat;
      const auto tau = num::logspace(std::max(1.0, phi.tau_min()), curv.tau_max, curv.points);
      write_curvature_csv(out.open("curvature.csv"), scalar_curvature(phi, ModelParams::cscK(curv.b, base), tau));
      return out.finish(true);
    }

    if (ode_cmd->parsed()) {
      Artifacts out(root, *ode_cmd, seed);
      const auto sol =
          solve_prescribed_scalar(ModelParams::cscK(ode.b, ode.s_hat), [](double) { return 0.0; }, ode.tau_max, ode.n);
      const auto exact = scalar_flat_profile(ode.b, ode.s_hat);
      auto& csv = out.open("ode.csv");
      csv << "tau,phi,phi_exact\n";
      double worst = 0.0;
      for (std::size_t i = 0; i < sol.tau.size(); ++i) {
        const double e = exact.value(sol.tau[i]);
        csv << fmt(sol.tau[i]) << ',' << fmt(sol.phi[i]) << ',' << fmt(e) << '\n';
        if (i > 0) worst = std::max(worst, std::abs(sol.phi[i] - e) / std::abs(e));
      }
      std::vector<checks::Verdict> vs{checks::at_most("max relative error against closed form", worst, 1e-6),
                                      checks::holds("solution not truncated", !sol.truncated)};
      out.write("verdicts.json", verdicts_json(vs));
      report(vs);
      return out.finish(all_pass(vs));
    }

    if (growth->parsed()) {
      Artifacts out(root, *growth, seed);
      const auto phi = scalar_flat_profile(grow.b, grow.s_hat);
      const double vol_expected = grow.s_hat > 0.0 ? 2.0 * (grow.b + 1) : 2.0;
      const auto vol = volume_growth(phi, grow.b, vol_expected);
      const auto dist = grow.s_hat > 0.0 ? distance_norm_growth(phi, grow.s_hat / (grow.b * (grow.b + 1.0)))
                                          : tau_distance_growth(phi, 2.0 / (grow.b + 1.0));
      auto& v_csv = out.open("volume.csv");
      v_csv << "r,volume\n";
      for (std::size_t i = 0; i < vol.x.size(); ++i) v_csv << fmt(vol.x[i]) << ',' << fmt(vol.y[i]) << '\n';
      auto& d_csv = out.open("distance.csv");
      d_csv << (grow.s_hat > 0.0 ? "xi_norm,distance\n" : "distance,tau\n");
      for (std::size_t i = 0; i < dist.x.size(); ++i) d_csv << fmt(dist.x[i]) << ',' << fmt(dist.y[i]) << '\n';
      std::vector<checks::Verdict> vs{
          checks::within("volume growth exponent", vol.expected, vol.fit.exponent, 0.02 * vol.expected),
          checks::within(grow.s_hat > 0.0 ? "distance vs |xi| exponent" : "tau vs distance exponent", dist.expected,
                         dist.fit.exponent, 0.02 * dist.expected)};
      out.write("verdicts.json", verdicts_json(vs));
      report(vs);
      return out.finish(all_pass(vs));
    }

    if (decay->parsed()) {
      Artifacts out(root, *decay, seed);
      const auto d = decay_experiment(dec.n, dec.s_hat, dec.epsilon);
      auto& csv = out.open("decay.csv");
      csv << "r,S\n";
      for (std::size_t i = 0; i < d.r.size(); ++i) csv << fmt(d.r[i]) << ',' << fmt(d.S[i]) << '\n';
      const auto v = d.exactly_flat ? checks::holds("S identically zero", true)
                                    : checks::within("decay slope", d.expected, d.fit.exponent,
                                                     0.03 * std::abs(d.expected));
      auto j = ordered_json::parse(checks::verdict_json(v));
      j["exponent"] = d.exactly_flat ? ordered_json(nullptr) : ordered_json(d.fit.exponent);
      j["exactly_flat"] = d.exactly_flat;
      out.write("decay.json", j.dump(2) + "\n");
      report({v});
      return out.finish(v.pass);
    }

    if (barrier->parsed()) {
      Artifacts out(root, *barrier, seed);
      const auto tau = num::logspace(1.0, 1e6, 200);
      const auto r = barrier_check(bar.n, bar.s_hat, bar.delta, tau);
      auto& csv = out.open("barrier.csv");
      csv << "tau,lhs,rhs\n";
      for (std::size_t i = 0; i < tau.size(); ++i) csv << fmt(tau[i]) << ',' << fmt(r.lhs[i]) << ',' << fmt(r.rhs[i]) << '\n';
      std::vector<checks::Verdict> vs{checks::at_most("relative gap to the bound", r.max_relative_gap, 1e-8)};
      if (bar.delta > 2.0 && bar.delta < 2.0 * bar.n - 2.0)
        vs.push_back(checks::holds("strictly negative", r.max_lhs < 0.0));
      out.write("verdicts.json", verdicts_json(vs));
      report(vs);
      return out.finish(all_pass(vs));
    }

    if (sobolev->parsed()) {
      Artifacts out(root, *sobolev, seed);
      if (!(sob.lambda_max > sob.lambda_min)) throw std::invalid_argument("--lambda-max must exceed --lambda-min");
      const auto sweep = sobolev_scaling_sweep(sob.n, sob.s_hat, num::logspace(sob.lambda_min, sob.lambda_max, sob.count));
      auto& csv = out.open("sobolev.csv");
      csv << "lambda,ratio\n";
      for (std::size_t i = 0; i < sweep.lambda.size(); ++i) csv << fmt(sweep.lambda[i]) << ',' << fmt(sweep.ratio[i]) << '\n';
      std::vector<checks::Verdict> vs{checks::at_most("max ratio / median", sweep.max_over_median, 1.2),
                                      checks::at_most("median / min ratio", 1.0 / sweep.min_over_median, 1.2)};
      out.write("verdicts.json", verdicts_json(vs));
      report(vs);
      return out.finish(all_pass(vs));
    }

    if (blockmat->parsed()) {
      Artifacts out(root, *blockmat, seed);
      const auto c = checks::block_identities(checks::derive_seed(seed, 8), instances);
      out.write("verdicts.json", verdicts_json(c.verdicts));
      report(c.verdicts);
      return out.finish(c.pass());
    }

    if (solve->parsed()) {
      Artifacts out(root, *solve, seed);
      const auto st = make_setup(sg);
      PicardOptions opts;
      opts.tol = tol;
      opts.max_iter = max_iter;
      GateOptions gopts;
      gopts.seed = checks::derive_seed(seed, 10);
      const auto run = solve_from_bump(st.grid, st.background, st.params, st.delta, opts, amplitude, gopts);
      out.write("trace.json", solve_trace_json(run.result.trace) + "\n");
      auto& csv = out.open("potential.csv");
      csv << "s,f\n";
      for (std::size_t i = 0; i < st.grid.n; ++i) csv << fmt(st.grid.s[i]) << ',' << fmt(run.result.f[i]) << '\n';
      std::vector<checks::Verdict> vs{checks::holds("converged", run.result.trace.status == "converged")};
      if (run.result.trace.status == "converged") {
        const auto s = scalar_map(st.grid, run.start, run.result.phi, st.params);
        double sup = 0.0;
        for (std::size_t i = kBoundaryRows; i + kBoundaryRows < st.grid.n; ++i) sup = std::max(sup, std::abs(s[i]));
        vs.push_back(checks::at_most("final sup|S|", sup, 1e-8));
      }
      out.write("verdicts.json", verdicts_json(vs));
      std::printf("status %s, amplitude %.3g, %zu iterations\n", run.result.trace.status.c_str(), run.amplitude,
                  run.result.trace.iterations.size());
      report(vs);
      return out.finish(all_pass(vs));
    }

    if (probe->parsed()) {
      Artifacts out(root, *probe, seed);
      const auto st = make_setup(pg);
      GateOptions gopts;
      gopts.seed = checks::derive_seed(seed, 10);
      const auto gate = estimate_gate_constants(st.grid, st.background, st.params, st.delta, gopts);
      ProbeOptions popts;
      popts.pairs = pairs;
      popts.seed = checks::derive_seed(seed, 11);
      popts.linear = linear;
      const double ratio = contraction_probe(st.grid, st.background, st.params, st.delta, gate.c0, popts);
      const auto v = linear ? checks::within("contraction ratio with Q = 0", 0.0, ratio, 0.0)
                            : checks::at_most("contraction ratio", ratio, 0.55);
      auto j = ordered_json::parse(checks::verdict_json(v));
      j["K_hat_est"] = gate.K_hat;
      j["c0_est"] = gate.c0;
      j["delta"] = st.delta;
      out.write("probe.json", j.dump(2) + "\n");
      report({v});
      return out.finish(v.pass);
    }

    if (verify->parsed()) {
      Artifacts out(root, *verify, seed);
      suite.seed = seed;
      const auto criteria = checks::run_all(suite);
      out.write("verdicts.json", checks::to_json(criteria, suite));
      bool pass = true;
      for (const auto& c : criteria) {
        std::printf("%s  %2d  %s\n", c.pass() ? "PASS" : "FAIL", c.id, c.name.c_str());
        pass = pass && c.pass();
      }
      return out.finish(pass);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalid;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalid;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFail;
  }
  return kInvalid;
}
