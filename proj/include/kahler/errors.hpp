#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kahler {

/// A data invariant (convexity, positivity, monotonicity) failed.
/// `node` is the first offending sample index when one exists.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(const std::string& what, std::size_t node = npos)
      : std::runtime_error(what), node_(node) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// An argument lies outside the interval or range where the operation is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A factorization hit a zero (or numerically zero) pivot.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, std::string block, std::size_t pivot,
                      double condition_estimate)
      : std::runtime_error(what),
        block_(std::move(block)),
        pivot_(pivot),
        condition_(condition_estimate) {}

  /// Which block failed ("A", "S", "T", or "band").
  const std::string& block() const noexcept { return block_; }
  std::size_t pivot() const noexcept { return pivot_; }
  double condition_estimate() const noexcept { return condition_; }

 private:
  std::string block_;
  std::size_t pivot_;
  double condition_;
};

}  // namespace kahler
