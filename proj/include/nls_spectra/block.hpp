#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "banded.hpp"

namespace nls_spectra {

/// One entry of a block grid: identically zero, a diagonal multiplication,
/// or a band matrix. All blocks of a BlockOperator are square of equal size.
template <class T>
struct Block {
  struct Zero {};
  std::variant<Zero, VecT<T>, BandedMatrix<T>> value = Zero{};

  Block() = default;
  Block(const BandedMatrix<T>& b) : value(b) {}
  Block(const VecT<T>& d) : value(d) {}

  bool is_zero() const { return std::holds_alternative<Zero>(value); }
  int bandwidth() const {
    if (auto b = std::get_if<BandedMatrix<T>>(&value))
      return std::max(b->lower_bandwidth(), b->upper_bandwidth());
    return 0;
  }
  T entry(std::size_t i, std::size_t j) const {
    if (auto b = std::get_if<BandedMatrix<T>>(&value)) return (*b)(i, j);
    if (auto d = std::get_if<VecT<T>>(&value)) return i == j ? (*d)[i] : T(0);
    return T(0);
  }
};

/// Grid of B x B blocks acting on block vectors [x_0; x_1; ...; x_{B-1}]
/// (component-major layout). `interleaved()` renumbers unknown (i, b) as
/// i*B + b, which keeps the assembled matrix narrow-banded.
template <class T>
class BlockOperator {
 public:
  BlockOperator(std::size_t blocks, std::size_t block_size)
      : nb_(blocks), n_(block_size), grid_(blocks * blocks) {}

  std::size_t block_rows() const { return nb_; }
  std::size_t block_cols() const { return nb_; }
  std::size_t block_size() const { return n_; }
  std::size_t size() const { return nb_ * n_; }

  void set(std::size_t r, std::size_t c, Block<T> b) {
    if (auto m = std::get_if<BandedMatrix<T>>(&b.value))
      if (m->rows() != n_ || m->cols() != n_) throw MeshMismatch("block has wrong size");
    if (auto d = std::get_if<VecT<T>>(&b.value))
      if (static_cast<std::size_t>(d->size()) != n_) throw MeshMismatch("diagonal block has wrong size");
    grid_[r * nb_ + c] = std::move(b);
  }
  const Block<T>& get(std::size_t r, std::size_t c) const { return grid_[r * nb_ + c]; }

  template <class U>
  VecT<decltype(T() * U())> apply(const VecT<U>& x) const {
    using R = decltype(T() * U());
    if (static_cast<std::size_t>(x.size()) != size()) throw MeshMismatch("apply: size mismatch");
    VecT<R> y = VecT<R>::Zero(size());
    for (std::size_t r = 0; r < nb_; ++r)
      for (std::size_t c = 0; c < nb_; ++c) {
        const Block<T>& b = get(r, c);
        VecT<U> xc = x.segment(c * n_, n_);
        if (auto m = std::get_if<BandedMatrix<T>>(&b.value)) {
          y.segment(r * n_, n_) += m->apply(xc);
        } else if (auto d = std::get_if<VecT<T>>(&b.value)) {
          for (std::size_t i = 0; i < n_; ++i) y[r * n_ + i] += (*d)[i] * xc[i];
        }
      }
    return y;
  }

  BandedMatrix<T> interleaved() const {
    int w = 0;
    for (const auto& b : grid_) w = std::max(w, b.bandwidth());
    const int bw = static_cast<int>(nb_) * (w + 1) - 1;
    BandedMatrix<T> A(size(), size(), bw, bw);
    for (std::size_t r = 0; r < nb_; ++r)
      for (std::size_t c = 0; c < nb_; ++c) {
        const Block<T>& b = get(r, c);
        if (auto m = std::get_if<BandedMatrix<T>>(&b.value)) {
          for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = m->col_begin(i); j < m->col_end(i); ++j)
              A.ref(i * nb_ + r, j * nb_ + c) += (*m)(i, j);
        } else if (auto d = std::get_if<VecT<T>>(&b.value)) {
          for (std::size_t i = 0; i < n_; ++i) A.ref(i * nb_ + r, i * nb_ + c) += (*d)[i];
        }
      }
    return A;
  }

  Eigen::SparseMatrix<T> to_sparse() const {
    std::vector<Eigen::Triplet<T>> trip;
    for (std::size_t r = 0; r < nb_; ++r)
      for (std::size_t c = 0; c < nb_; ++c) {
        const Block<T>& b = get(r, c);
        if (auto m = std::get_if<BandedMatrix<T>>(&b.value)) {
          for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = m->col_begin(i); j < m->col_end(i); ++j) {
              T v = (*m)(i, j);
              if (v != T(0)) trip.emplace_back(r * n_ + i, c * n_ + j, v);
            }
        } else if (auto d = std::get_if<VecT<T>>(&b.value)) {
          for (std::size_t i = 0; i < n_; ++i)
            if ((*d)[i] != T(0)) trip.emplace_back(r * n_ + i, c * n_ + i, (*d)[i]);
        }
      }
    Eigen::SparseMatrix<T> S(size(), size());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
  }

  template <class U>
  BlockOperator<U> cast() const {
    BlockOperator<U> o(nb_, n_);
    for (std::size_t r = 0; r < nb_; ++r)
      for (std::size_t c = 0; c < nb_; ++c) {
        const Block<T>& b = get(r, c);
        if (auto m = std::get_if<BandedMatrix<T>>(&b.value)) o.set(r, c, Block<U>(m->template cast<U>()));
        else if (auto d = std::get_if<VecT<T>>(&b.value)) o.set(r, c, Block<U>(VecT<U>(d->template cast<U>())));
      }
    return o;
  }

  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    return Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>(to_sparse());
  }

 private:
  std::size_t nb_, n_;
  std::vector<Block<T>> grid_;
};

/// Component-major <-> interleaved vector layouts.
template <class V>
V to_interleaved(const V& x, std::size_t blocks) {
  const std::size_t n = x.size() / blocks;
  V y(x.size());
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < n; ++i) y[i * blocks + b] = x[b * n + i];
  return y;
}

template <class V>
V from_interleaved(const V& y, std::size_t blocks) {
  const std::size_t n = y.size() / blocks;
  V x(y.size());
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < n; ++i) x[b * n + i] = y[i * blocks + b];
  return x;
}

}  // namespace nls_spectra
