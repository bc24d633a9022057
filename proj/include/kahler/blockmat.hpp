#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kahler/errors.hpp"

namespace kahler {

/// Dense row-major matrix over double or std::complex<double>.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator-(Matrix a) {
    for (auto& v : a.data_) v = -v;
    return a;
  }
  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("Matrix: inner dimensions differ");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  /// Maximum absolute column sum.
  double norm1() const {
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) sum += std::abs((*this)(i, j));
      best = std::max(best, sum);
    }
    return best;
  }

  double max_abs() const {
    double best = 0.0;
    for (const auto& v : data_) best = std::max(best, static_cast<double>(std::abs(v)));
    return best;
  }

 private:
  void require_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("Matrix: shapes differ");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<std::complex<double>>;

/// Condition numbers above this are treated as singular.
inline constexpr double kConditionThreshold = 1e12;

/// LU factorization with partial (row) pivoting: P A = L U, L unit lower.
template <class T>
class LU {
 public:
  /// `block` names the matrix in error messages ("A", "S", ...).
  LU(const Matrix<T>& a, std::string block = "A") : lu_(a), perm_(a.rows()), block_(std::move(block)) {
    if (!a.square()) throw std::invalid_argument("LU: matrix must be square");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    const double scale = a.max_abs();
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          piv = i;
        }
      if (!(best > 1e-300) || !(best > scale * 1e-15 * static_cast<double>(n)))
        throw SingularMatrixError("block " + block_ + " is singular: zero pivot at column " + std::to_string(k),
                                  block_, k, std::numeric_limits<double>::infinity());
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[k], perm_[piv]);
        sign_ = -sign_;
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        const T m = lu_(i, k) / lu_(k, k);
        lu_(i, k) = m;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
      }
    }
    condition_ = a.norm1() * inverse().norm1();
    if (!(condition_ <= kConditionThreshold))
      throw SingularMatrixError("block " + block_ + " is numerically singular (condition estimate " +
                                    std::to_string(condition_) + ")",
                                block_, n, condition_);
  }

  std::size_t size() const noexcept { return lu_.rows(); }
  double condition() const noexcept { return condition_; }

  T determinant() const {
    T det = static_cast<T>(static_cast<double>(sign_));
    for (std::size_t i = 0; i < size(); ++i) det *= lu_(i, i);
    return det;
  }

  /// Solves A X = B.
  Matrix<T> solve(const Matrix<T>& b) const {
    const std::size_t n = size();
    if (b.rows() != n) throw std::invalid_argument("LU::solve: row count mismatch");
    Matrix<T> x(n, b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        T acc = b(perm_[i], c);
        for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x(j, c);
        x(i, c) = acc;
      }
      for (std::size_t i = n; i-- > 0;) {
        T acc = x(i, c);
        for (std::size_t j = i + 1; j < n; ++j) acc -= lu_(i, j) * x(j, c);
        x(i, c) = acc / lu_(i, i);
      }
    }
    return x;
  }

  Matrix<T> inverse() const { return solve(Matrix<T>::identity(size())); }

 private:
  Matrix<T> lu_;
  std::vector<std::size_t> perm_;
  std::string block_;
  int sign_ = 1;
  double condition_ = 0.0;
};

/// T = [A B; C D] with A p x p and D q x q.
template <class T>
struct Block2x2 {
  Matrix<T> A, B, C, D;

  std::size_t p() const noexcept { return A.rows(); }
  std::size_t q() const noexcept { return D.rows(); }

  void validate() const {
    const bool ok = A.square() && D.square() && B.rows() == A.rows() && B.cols() == D.cols() &&
                    C.rows() == D.rows() && C.cols() == A.cols();
    if (!ok) throw std::invalid_argument("Block2x2: inconsistent block dimensions");
  }

  Matrix<T> assemble() const {
    validate();
    const std::size_t n = p() + q();
    Matrix<T> t(n, n);
    for (std::size_t i = 0; i < p(); ++i) {
      for (std::size_t j = 0; j < p(); ++j) t(i, j) = A(i, j);
      for (std::size_t j = 0; j < q(); ++j) t(i, p() + j) = B(i, j);
    }
    for (std::size_t i = 0; i < q(); ++i) {
      for (std::size_t j = 0; j < p(); ++j) t(p() + i, j) = C(i, j);
      for (std::size_t j = 0; j < q(); ++j) t(p() + i, p() + j) = D(i, j);
    }
    return t;
  }

  static Block2x2 partition(const Matrix<T>& t, std::size_t p) {
    if (!t.square() || p == 0 || p >= t.rows()) throw std::invalid_argument("Block2x2: invalid split");
    const std::size_t q = t.rows() - p;
    Block2x2 out{Matrix<T>(p, p), Matrix<T>(p, q), Matrix<T>(q, p), Matrix<T>(q, q)};
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < t.cols(); ++j) {
        if (i < p && j < p) out.A(i, j) = t(i, j);
        else if (i < p) out.B(i, j - p) = t(i, j);
        else if (j < p) out.C(i - p, j) = t(i, j);
        else out.D(i - p, j - p) = t(i, j);
      }
    return out;
  }
};

/// S = D - C A^{-1} B.
template <class T>
Matrix<T> schur_complement(const Block2x2<T>& t) {
  t.validate();
  const LU<T> a(t.A, "A");
  return t.D - t.C * a.solve(t.B);
}

/// det T = det A * det S.
template <class T>
T schur_det(const Block2x2<T>& t) {
  t.validate();
  const LU<T> a(t.A, "A");
  const LU<T> s(t.D - t.C * a.solve(t.B), "S");
  return a.determinant() * s.determinant();
}

/// Blocks of T^{-1}:
/// [A^{-1} + A^{-1} B S^{-1} C A^{-1}, -A^{-1} B S^{-1}; -S^{-1} C A^{-1}, S^{-1}].
/// The formula loses accuracy with cond(A) even when T is well conditioned;
/// each refinement step X <- X + X (I - T X) squares the relative error.
template <class T>
Block2x2<T> block_inverse(const Block2x2<T>& t, int refinement_steps = 1) {
  t.validate();
  const LU<T> a(t.A, "A");
  const Matrix<T> a_inv_b = a.solve(t.B);
  const LU<T> s(t.D - t.C * a_inv_b, "S");
  const Matrix<T> a_inv = a.inverse();
  const Matrix<T> s_inv = s.inverse();
  const Matrix<T> c_a_inv = t.C * a_inv;
  const Matrix<T> upper_right = -(a_inv_b * s_inv);
  const Matrix<T> lower_left = -(s_inv * c_a_inv);
  Block2x2<T> x{a_inv - upper_right * c_a_inv, upper_right, lower_left, s_inv};
  if (refinement_steps <= 0) return x;
  const Matrix<T> full = t.assemble();
  Matrix<T> inv = x.assemble();
  const Matrix<T> eye = Matrix<T>::identity(full.rows());
  for (int k = 0; k < refinement_steps; ++k) inv += inv * (eye - full * inv);
  return Block2x2<T>::partition(inv, t.p());
}

}  // namespace kahler
