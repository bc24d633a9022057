#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kahler::testing {

/// Seeded generator for property tests. Every test constructs its own so
/// failures reproduce from the printed seed alone.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double log_uniform(double lo, double hi);

  std::vector<double> uniform_vector(std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (auto& x : out) x = uniform(lo, hi);
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline double Gen::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

}  // namespace kahler::testing
