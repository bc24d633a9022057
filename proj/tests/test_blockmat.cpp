#include <Eigen/Dense>
#include <complex>
#include <cstdio>

#include "doctest.h"
#include "gen.hpp"
#include "kahler/blockmat.hpp"
#include "kahler/errors.hpp"

using namespace kahler;
using cd = std::complex<double>;

namespace {

template <class T>
using Dense = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
T draw(kahler::testing::Gen& gen) {
  if constexpr (std::is_same_v<T, double>) {
    return gen.uniform(-1.0, 1.0);
  } else {
    return {gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0)};
  }
}

template <class T>
Matrix<T> random_matrix(kahler::testing::Gen& gen, std::size_t r, std::size_t c) {
  Matrix<T> m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) m(i, j) = draw<T>(gen);
  }
  return m;
}

template <class T>
Dense<T> to_dense(const Matrix<T>& m) {
  Dense<T> d(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) d(i, j) = m(i, j);
  }
  return d;
}

template <class T>
double cond2(const Dense<T>& m) {
  Eigen::JacobiSVD<Dense<T>> svd(m);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

template <class T>
Block2x2<T> random_block(kahler::testing::Gen& gen, std::size_t p, std::size_t q) {
  return {random_matrix<T>(gen, p, p), random_matrix<T>(gen, p, q), random_matrix<T>(gen, q, p), random_matrix<T>(gen, q, q)};
}

template <class T>
double rel_diff(const Dense<T>& a, const Dense<T>& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Property run over seeded instances with p, q in [1, 8]; instances whose T, A
// or Schur complement have 2-norm condition above 1e8 are redrawn.
template <class T>
void identity_property(std::uint64_t seed, int instances, int refinement) {
  kahler::testing::Gen gen(seed);
  int accepted = 0;
  double worst_det = 0.0, worst_inv = 0.0, worst_involution = 0.0;
  while (accepted < instances) {
    const auto p = static_cast<std::size_t>(gen.integer(1, 8));
    const auto q = static_cast<std::size_t>(gen.integer(1, 8));
    const auto t = random_block<T>(gen, p, q);
    const Dense<T> full = to_dense(t.assemble());
    const Dense<T> a = to_dense(t.A);
    if (cond2<T>(full) > 1e8 || cond2<T>(a) > 1e8) continue;
    const Dense<T> s = to_dense(t.D) - to_dense(t.C) * a.partialPivLu().solve(to_dense(t.B));
    if (cond2<T>(s) > 1e8) continue;
    ++accepted;

    const T det_oracle = full.partialPivLu().determinant();
    worst_det = std::max(worst_det, std::abs(schur_det(t) - det_oracle) / std::abs(det_oracle));

    const auto inv = block_inverse(t, refinement);
    const Dense<T> inv_oracle = full.inverse();
    worst_inv = std::max(worst_inv, rel_diff<T>(to_dense(inv.assemble()), inv_oracle));

    const auto back = block_inverse(inv, refinement);
    worst_involution = std::max(worst_involution, rel_diff<T>(to_dense(back.assemble()), full));
  }
  CAPTURE(seed);
  CHECK(worst_det <= 1e-10);
  CHECK(worst_inv <= 1e-10);
  CHECK(worst_involution <= 1e-8);
}

}  // namespace

TEST_CASE_TEMPLATE("block identities hold on seeded random instances", T, double, cd) {
  identity_property<T>(20240601, 1000, 1);
}

TEST_CASE("unrefined formula on well conditioned blocks") {
  // Diagonally dominant A and S keep the raw formula accurate.
  kahler::testing::Gen gen(401);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = static_cast<std::size_t>(gen.integer(1, 6));
    const auto q = static_cast<std::size_t>(gen.integer(1, 6));
    auto t = random_block<double>(gen, p, q);
    for (std::size_t i = 0; i < p; ++i) t.A(i, i) += 2.0 * p + 2.0;
    for (std::size_t i = 0; i < q; ++i) t.D(i, i) += 2.0 * q + 2.0 + p;
    const auto full = to_dense(t.assemble());
    CHECK(rel_diff<double>(to_dense(block_inverse(t, 0).assemble()), full.inverse()) < 1e-12);
  }
}

TEST_CASE("closed-form small cases") {
  SUBCASE("A = I, B = C = 0 gives S = D") {
    kahler::testing::Gen gen(402);
    Block2x2<double> t{Matrix<double>::identity(3), Matrix<double>(3, 2), Matrix<double>(2, 3), random_matrix<double>(gen, 2, 2)};
    const auto s = schur_complement(t);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) CHECK(s(i, j) == t.D(i, j));
    }
  }
  SUBCASE("scalar blocks") {
    Block2x2<double> t{Matrix<double>(1, 1, 2.0), Matrix<double>(1, 1, 3.0), Matrix<double>(1, 1, 5.0), Matrix<double>(1, 1, 7.0)};
    CHECK(schur_complement(t)(0, 0) == doctest::Approx(7.0 - 15.0 / 2.0));
    CHECK(schur_det(t) == doctest::Approx(2.0 * 7.0 - 3.0 * 5.0));
  }
  SUBCASE("identity") {
    Block2x2<double> t{Matrix<double>::identity(2), Matrix<double>(2, 3), Matrix<double>(3, 2), Matrix<double>::identity(3)};
    CHECK(schur_det(t) == doctest::Approx(1.0));
    const auto inv = block_inverse(t);
    const auto full = inv.assemble();
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) CHECK(full(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
    }
  }
  SUBCASE("block diagonal") {
    kahler::testing::Gen gen(403);
    Block2x2<double> t{random_matrix<double>(gen, 2, 2), Matrix<double>(2, 2), Matrix<double>(2, 2), random_matrix<double>(gen, 2, 2)};
    const auto inv = block_inverse(t, 0);
    CHECK(rel_diff<double>(to_dense(inv.A), to_dense(t.A).inverse()) < 1e-12);
    CHECK(rel_diff<double>(to_dense(inv.D), to_dense(t.D).inverse()) < 1e-12);
    CHECK(to_dense(inv.B).cwiseAbs().maxCoeff() == 0.0);
    CHECK(to_dense(inv.C).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("singular blocks are reported by name") {
  Matrix<double> singular(2, 2, 1.0);
  Block2x2<double> bad_a{singular, Matrix<double>::identity(2), Matrix<double>::identity(2), Matrix<double>::identity(2)};
  try {
    (void)schur_det(bad_a);
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.block() == "A");
  }
  // A = I, B = C = I, D = I gives S = 0.
  Block2x2<double> bad_s{Matrix<double>::identity(2), Matrix<double>::identity(2), Matrix<double>::identity(2),
                         Matrix<double>::identity(2)};
  try {
    (void)block_inverse(bad_s);
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.block() == "S");
  }
  Block2x2<double> ragged{Matrix<double>::identity(2), Matrix<double>(3, 1), Matrix<double>(1, 2), Matrix<double>(1, 1)};
  CHECK_THROWS_AS(schur_det(ragged), std::invalid_argument);
}
