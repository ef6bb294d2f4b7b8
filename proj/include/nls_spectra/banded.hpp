#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace nls_spectra {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class SymmetryTag { symmetric, nonsymmetric };

namespace detail {
inline double abs2(double x) { return x * x; }
inline double abs2(const cplx& z) { return std::norm(z); }
inline double conj_if(double x) { return x; }
inline cplx conj_if(const cplx& z) { return std::conj(z); }
}  // namespace detail

/// Rectangular band matrix: entry (i, j) is stored iff -kl <= j - i <= ku.
/// Rows are contiguous in storage.
template <class T>
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(std::size_t rows, std::size_t cols, int kl, int ku)
      : rows_(rows), cols_(cols), kl_(kl), ku_(ku), data_(rows * (kl + ku + 1), T(0)) {
    if (kl < 0 || ku < 0) throw InvalidMesh("negative bandwidth");
  }

  static BandedMatrix identity(std::size_t n) {
    BandedMatrix I(n, n, 0, 0);
    for (std::size_t i = 0; i < n; ++i) I.ref(i, i) = T(1);
    return I;
  }

  template <class V>
  static BandedMatrix diagonal(const V& d) {
    BandedMatrix D(d.size(), d.size(), 0, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(d.size()); ++i) D.ref(i, i) = T(d[i]);
    return D;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_; }
  int lower_bandwidth() const { return kl_; }
  int upper_bandwidth() const { return ku_; }
  bool square() const { return rows_ == cols_; }

  bool in_band(std::size_t i, std::size_t j) const {
    long d = static_cast<long>(j) - static_cast<long>(i);
    return i < rows_ && j < cols_ && d >= -kl_ && d <= ku_;
  }

  T operator()(std::size_t i, std::size_t j) const {
    return in_band(i, j) ? data_[index(i, j)] : T(0);
  }

  T& ref(std::size_t i, std::size_t j) {
    if (!in_band(i, j))
      throw OutOfRange("entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside band");
    return data_[index(i, j)];
  }

  /// First and one-past-last column with storage in row i.
  std::size_t col_begin(std::size_t i) const {
    return i > static_cast<std::size_t>(kl_) ? i - kl_ : 0;
  }
  std::size_t col_end(std::size_t i) const {
    return std::min(cols_, i + static_cast<std::size_t>(ku_) + 1);
  }

  template <class U>
  VecT<decltype(T() * U())> apply(const VecT<U>& x) const {
    using R = decltype(T() * U());
    if (static_cast<std::size_t>(x.size()) != cols_) throw MeshMismatch("apply: size mismatch");
    VecT<R> y = VecT<R>::Zero(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      R s(0);
      for (std::size_t j = col_begin(i); j < col_end(i); ++j) s += data_[index(i, j)] * x[j];
      y[i] = s;
    }
    return y;
  }

  /// Conjugate transpose (plain transpose for real entries).
  BandedMatrix adjoint() const {
    BandedMatrix t(cols_, rows_, ku_, kl_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = col_begin(i); j < col_end(i); ++j)
        t.ref(j, i) = detail::conj_if(data_[index(i, j)]);
    return t;
  }

  BandedMatrix operator*(const BandedMatrix& b) const {
    if (cols_ != b.rows_) throw MeshMismatch("product: inner dimensions differ");
    BandedMatrix c(rows_, b.cols_, kl_ + b.kl_, ku_ + b.ku_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = col_begin(i); k < col_end(i); ++k) {
        T a = data_[index(i, k)];
        if (a == T(0)) continue;
        for (std::size_t j = b.col_begin(k); j < b.col_end(k); ++j)
          c.data_[c.index(i, j)] += a * b.data_[b.index(k, j)];
      }
    return c;
  }

  BandedMatrix operator+(const BandedMatrix& b) const { return combine(b, T(1)); }
  BandedMatrix operator-(const BandedMatrix& b) const { return combine(b, T(-1)); }

  BandedMatrix operator*(T s) const {
    BandedMatrix c = *this;
    for (auto& v : c.data_) v *= s;
    return c;
  }

  /// this + s * I
  BandedMatrix shifted(T s) const {
    BandedMatrix c = *this;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) c.ref(i, i) += s;
    return c;
  }

  /// this + diag(d)
  template <class V>
  BandedMatrix plus_diagonal(const V& d) const {
    BandedMatrix c = *this;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) c.ref(i, i) += T(d[i]);
    return c;
  }

  template <class U>
  BandedMatrix<U> cast() const {
    BandedMatrix<U> c(rows_, cols_, kl_, ku_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = col_begin(i); j < col_end(i); ++j) c.ref(i, j) = U((*this)(i, j));
    return c;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Max-row-sum norm.
  double norm_inf() const {
    double m = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0;
      for (std::size_t j = col_begin(i); j < col_end(i); ++j) s += std::abs(data_[index(i, j)]);
      m = std::max(m, s);
    }
    return m;
  }

  double max_asymmetry() const {
    if (!square()) return std::numeric_limits<double>::infinity();
    double m = 0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = col_begin(i); j < col_end(i); ++j)
        m = std::max(m, std::abs((*this)(i, j) - detail::conj_if((*this)(j, i))));
    return m;
  }

  SymmetryTag symmetry_tag() const {
    return max_asymmetry() <= 1e-12 * max_abs() ? SymmetryTag::symmetric
                                                : SymmetryTag::nonsymmetric;
  }

  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> d =
        Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = col_begin(i); j < col_end(i); ++j) d(i, j) = data_[index(i, j)];
    return d;
  }

  bool operator==(const BandedMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && kl_ == o.kl_ && ku_ == o.ku_ && data_ == o.data_;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return i * (kl_ + ku_ + 1) + (j + kl_ - i);
  }

  BandedMatrix combine(const BandedMatrix& b, T sign) const {
    if (rows_ != b.rows_ || cols_ != b.cols_) throw MeshMismatch("sum: shapes differ");
    BandedMatrix c(rows_, cols_, std::max(kl_, b.kl_), std::max(ku_, b.ku_));
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = col_begin(i); j < col_end(i); ++j) c.ref(i, j) += (*this)(i, j);
      for (std::size_t j = b.col_begin(i); j < b.col_end(i); ++j) c.ref(i, j) += sign * b(i, j);
    }
    return c;
  }

  std::size_t rows_ = 0, cols_ = 0;
  int kl_ = 0, ku_ = 0;
  std::vector<T> data_;
};

using BandedOperator = BandedMatrix<double>;
using ComplexBandedOperator = BandedMatrix<cplx>;

/// LU with partial pivoting of a square band matrix, LAPACK gbtf2 layout
/// (column-major, kl extra rows for fill-in).
template <class T>
class BandedLU {
 public:
  /// With `perturb_tiny_pivots` a pivot below 8 eps ||A|| is replaced by that
  /// floor instead of raising SingularShift (inverse iteration at an eigenvalue).
  explicit BandedLU(const BandedMatrix<T>& a, bool perturb_tiny_pivots = false)
      : n_(a.rows()), kl_(a.lower_bandwidth()), ku_(a.upper_bandwidth()) {
    if (!a.square()) throw MeshMismatch("LU of a non-square matrix");
    ld_ = 2 * kl_ + ku_ + 1;
    ab_.assign(ld_ * n_, T(0));
    piv_.resize(n_);
    const int kv = kl_ + ku_;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = a.col_begin(i); j < a.col_end(i); ++j)
        at(kv + static_cast<long>(i) - static_cast<long>(j), j) = a(i, j);
    const double scale = std::max(a.norm_inf(), std::numeric_limits<double>::min());
    const double tiny = 8.0 * std::numeric_limits<double>::epsilon() * scale;

    std::size_t ju = 0;
    for (std::size_t j = 0; j < n_; ++j) {
      const long km = std::min<long>(kl_, static_cast<long>(n_) - 1 - static_cast<long>(j));
      long jp = 0;
      double best = -1;
      for (long i = 0; i <= km; ++i) {
        double v = std::abs(at(kv + i, j));
        if (v > best) { best = v; jp = i; }
      }
      piv_[j] = j + jp;
      if (best <= tiny) {
        if (!perturb_tiny_pivots) {
          min_pivot_ = 0;
          throw SingularShift("zero pivot in banded LU at column " + std::to_string(j));
        }
        at(kv + jp, j) = T(tiny);
        best = tiny;
      }
      min_pivot_ = std::min(min_pivot_, best / scale);
      ju = std::max(ju, std::min<std::size_t>(j + ku_ + jp, n_ - 1));
      if (jp != 0)
        for (std::size_t k = j; k <= ju; ++k)
          std::swap(at(kv + jp - static_cast<long>(k - j), k), at(kv - static_cast<long>(k - j), k));
      const T d = at(kv, j);
      for (long i = 1; i <= km; ++i) at(kv + i, j) /= d;
      for (std::size_t k = j + 1; k <= ju; ++k) {
        const T u = at(kv - static_cast<long>(k - j), k);
        if (u == T(0)) continue;
        for (long i = 1; i <= km; ++i) at(kv + i - static_cast<long>(k - j), k) -= at(kv + i, j) * u;
      }
    }
  }

  std::size_t size() const { return n_; }
  /// Smallest |pivot| relative to ||A||_inf; a crude conditioning indicator.
  double min_relative_pivot() const { return min_pivot_; }

  template <class U>
  void solve_in_place(VecT<U>& b) const {
    const int kv = kl_ + ku_;
    for (std::size_t j = 0; j < n_; ++j) {
      const long km = std::min<long>(kl_, static_cast<long>(n_) - 1 - static_cast<long>(j));
      if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
      const U bj = b[j];
      for (long i = 1; i <= km; ++i) b[j + i] -= at(kv + i, j) * bj;
    }
    for (std::size_t jj = n_; jj-- > 0;) {
      b[jj] /= at(kv, jj);
      const U bj = b[jj];
      const std::size_t i0 = jj > static_cast<std::size_t>(kv) ? jj - kv : 0;
      for (std::size_t i = i0; i < jj; ++i) b[i] -= at(kv + static_cast<long>(i) - static_cast<long>(jj), jj) * bj;
    }
  }

  template <class U>
  VecT<U> solve(VecT<U> b) const {
    solve_in_place(b);
    return b;
  }

 private:
  T& at(long r, std::size_t c) { return ab_[c * ld_ + r]; }
  const T& at(long r, std::size_t c) const { return ab_[c * ld_ + r]; }

  std::size_t n_;
  int kl_, ku_;
  std::size_t ld_;
  std::vector<T> ab_;
  std::vector<std::size_t> piv_;
  double min_pivot_ = std::numeric_limits<double>::infinity();
};

}  // namespace nls_spectra
