#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "block.hpp"
#include "mesh.hpp"

namespace nls_spectra {

enum class Which { nearest_shift, smallest_real, all_symmetric };

enum class SpectralClass { zero, real_pair, imaginary_pair, complex_quadruple, continuous_band };

inline std::string to_string(SpectralClass c) {
  switch (c) {
    case SpectralClass::zero: return "zero";
    case SpectralClass::real_pair: return "real_pair";
    case SpectralClass::imaginary_pair: return "imaginary_pair";
    case SpectralClass::complex_quadruple: return "complex_quadruple";
    case SpectralClass::continuous_band: return "continuous_band";
  }
  return "?";
}

struct EigenRequest {
  cplx shift{0.0, 0.0};
  int count = 10;
  Which which = Which::nearest_shift;
  double tol = 1e-10;  ///< certified: ||A v - lam v|| <= tol * max(1, ||A||_inf) * ||v||
  int max_restart = 300;
  bool want_vectors = false;
};

struct SpectrumParams {
  int n = 1;
  double p = 0;
  int m = 0;
  std::optional<int> k;
  std::string mesh;
};

struct SpectrumResult {
  std::vector<cplx> eigenvalues;
  std::vector<SpectralClass> classifications;
  std::optional<Eigen::MatrixXcd> eigenvectors;  ///< one column per eigenvalue
  std::vector<double> residuals;                 ///< ||A v - lam v|| / ||v||
  double operator_norm = 0;                      ///< ||A||_inf used for certification
  SpectrumParams parameters;
  std::vector<cplx> pairing_violations;

  std::size_t size() const { return eigenvalues.size(); }
  std::size_t count(SpectralClass c) const {
    return static_cast<std::size_t>(std::count(classifications.begin(), classifications.end(), c));
  }
};

// ---------------------------------------------------------------------------
// Symmetric band matrices: Sturm counts by LDL^T inertia, bisection, inverse
// iteration.

/// Number of eigenvalues of the symmetric band matrix A strictly below x.
inline std::size_t count_below(const BandedOperator& A, double x) {
  const std::size_t n = A.rows();
  const int b = A.lower_bandwidth();
  // lower band, column-oriented: L[i][d] = entry (i+d, i)
  std::vector<double> L(n * (b + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d <= b && i + d < n; ++d) L[i * (b + 1) + d] = A(i + d, i) - (d == 0 ? x : 0.0);
  const double tiny = std::numeric_limits<double>::epsilon() * std::max(A.norm_inf(), 1.0);
  std::size_t neg = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double piv = L[j * (b + 1)];
    if (std::abs(piv) < tiny) piv = -tiny;
    if (piv < 0) ++neg;
    const int km = static_cast<int>(std::min<std::size_t>(b, n - 1 - j));
    for (int r = 1; r <= km; ++r) {
      const double lr = L[j * (b + 1) + r] / piv;
      if (lr == 0.0) continue;
      // update column j+c, rows j+r for r >= c
      for (int c = 1; c <= r; ++c) L[(j + c) * (b + 1) + (r - c)] -= lr * L[j * (b + 1) + c];
    }
  }
  return neg;
}

inline std::pair<double, double> gershgorin(const BandedOperator& A) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double rad = 0;
    for (std::size_t j = A.col_begin(i); j < A.col_end(i); ++j)
      if (j != i) rad += std::abs(A(i, j));
    lo = std::min(lo, A(i, i) - rad);
    hi = std::max(hi, A(i, i) + rad);
  }
  return {lo, hi};
}

namespace detail {
inline double bisect_eigenvalue(const BandedOperator& A, std::size_t index, double lo, double hi) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
  for (int it = 0; it < 200 && hi - lo > 4.0 * eps * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(A, mid) > index) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline Vec inverse_iteration(const BandedOperator& A, double lambda, const std::vector<Vec>& prior) {
  const std::size_t n = A.rows();
  const BandedLU<double> lu(A.shifted(-lambda), true);
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.3 * std::sin(0.37 * static_cast<double>(i) + 0.11);
  v.normalize();
  for (int it = 0; it < 4; ++it) {
    for (const Vec& u : prior) v -= u.dot(v) * u;
    lu.solve_in_place(v);
    if (!v.allFinite()) throw ConvergenceFailure("inverse iteration overflowed");
    v.normalize();
  }
  for (const Vec& u : prior) v -= u.dot(v) * u;
  return v.normalized();
}
}  // namespace detail

/// Lowest `count` eigenvalues (Which::smallest_real) or all of them
/// (Which::all_symmetric) of a symmetric band matrix.
inline SpectrumResult symmetric_eigs(const BandedOperator& A, std::size_t count,
                                     Which which = Which::smallest_real, double tol = 1e-10,
                                     bool want_vectors = false) {
  if (!A.square()) throw MeshMismatch("symmetric_eigs needs a square matrix");
  if (A.symmetry_tag() != SymmetryTag::symmetric)
    throw ConvergenceFailure("symmetric_eigs called on a nonsymmetric matrix");
  if (which == Which::nearest_shift) throw UsageError("symmetric_eigs supports smallest_real and all_symmetric");
  const std::size_t n = A.rows();
  if (which == Which::all_symmetric) count = n;
  count = std::min(count, n);
  if (count == 0) throw OutOfRange("count must be >= 1");

  auto [lo, hi] = gershgorin(A);
  const double span = std::max(hi - lo, 1.0);
  lo -= 1e-8 * span;
  hi += 1e-8 * span;

  SpectrumResult res;
  res.operator_norm = A.norm_inf();
  const double limit = tol * std::max(1.0, res.operator_norm);
  std::vector<Vec> vecs;
  double prev = lo;
  for (std::size_t i = 0; i < count; ++i) {
    const double lam = detail::bisect_eigenvalue(A, i, prev, hi);
    std::vector<Vec> close;
    for (std::size_t q = 0; q < vecs.size(); ++q)
      if (std::abs(res.eigenvalues[q].real() - lam) < 1e-6 * std::max(1.0, std::abs(lam))) close.push_back(vecs[q]);
    Vec v = detail::inverse_iteration(A, lam, close);
    const double r = (A.apply(v) - lam * v).norm();
    if (!(r <= limit))
      throw ConvergenceFailure("symmetric eigenpair " + std::to_string(i) + " residual " + std::to_string(r));
    res.eigenvalues.emplace_back(lam, 0.0);
    res.residuals.push_back(r);
    vecs.push_back(std::move(v));
    prev = lam - 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lam));
  }
  if (want_vectors) {
    Eigen::MatrixXcd V(n, count);
    for (std::size_t i = 0; i < count; ++i) V.col(i) = vecs[i].cast<cplx>();
    res.eigenvectors = std::move(V);
  }
  return res;
}

/// Every eigenvalue strictly below `cutoff` (Sturm count first).
inline SpectrumResult symmetric_eigs_below(const BandedOperator& A, double cutoff, double tol = 1e-10,
                                           bool want_vectors = false) {
  const std::size_t c = count_below(A, cutoff);
  if (c == 0) {
    SpectrumResult r;
    r.operator_norm = A.norm_inf();
    return r;
  }
  return symmetric_eigs(A, c, Which::smallest_real, tol, want_vectors);
}

// ---------------------------------------------------------------------------
// Shift-invert Krylov-Schur.

/// Abstract (A - shift)^{-1} together with A itself.
struct ShiftInvertMap {
  std::size_t n = 0;
  cplx shift;
  std::function<void(CVec&)> solve;            ///< x <- (A - shift)^{-1} x
  std::function<CVec(const CVec&)> apply;      ///< A x
  double norm = 1;                             ///< ||A||_inf
  /// Same operator factored at another shift (used to polish Ritz pairs).
  std::function<ShiftInvertMap(cplx)> refactor;
};

template <class T>
ShiftInvertMap make_banded_map(const BandedMatrix<T>& A, cplx shift) {
  ShiftInvertMap M;
  M.n = A.rows();
  M.shift = shift;
  M.norm = A.norm_inf();
  if constexpr (std::is_same_v<T, double>) {
    if (shift.imag() == 0.0) {
      auto lu = std::make_shared<BandedLU<double>>(A.shifted(-shift.real()));
      M.solve = [lu](CVec& x) { lu->solve_in_place(x); };
    } else {
      auto lu = std::make_shared<BandedLU<cplx>>(A.template cast<cplx>().shifted(-shift));
      M.solve = [lu](CVec& x) { lu->solve_in_place(x); };
    }
    auto Ap = std::make_shared<BandedMatrix<double>>(A);
    M.apply = [Ap](const CVec& x) { return CVec(Ap->apply(x)); };
  } else {
    auto lu = std::make_shared<BandedLU<cplx>>(A.shifted(-shift));
    M.solve = [lu](CVec& x) { lu->solve_in_place(x); };
    auto Ap = std::make_shared<BandedMatrix<cplx>>(A);
    M.apply = [Ap](const CVec& x) { return CVec(Ap->apply(x)); };
  }
  auto Ac = std::make_shared<BandedMatrix<T>>(A);
  M.refactor = [Ac](cplx s) { return make_banded_map(*Ac, s); };
  return M;
}

/// Block operator through its interleaved band form; vectors stay component-major.
template <class T>
ShiftInvertMap make_block_map(const BlockOperator<T>& L, cplx shift) {
  const std::size_t B = L.block_rows();
  ShiftInvertMap inner = make_banded_map(L.interleaved(), shift);
  ShiftInvertMap M = inner;
  M.solve = [inner, B](CVec& x) {
    CVec y = to_interleaved(x, B);
    inner.solve(y);
    x = from_interleaved(y, B);
  };
  auto Lp = std::make_shared<BlockOperator<T>>(L);
  M.apply = [Lp](const CVec& x) { return CVec(Lp->apply(x)); };
  M.refactor = [Lp](cplx s) { return make_block_map(*Lp, s); };
  return M;
}

/// Sparse LU route for operators whose band is too wide to store (full 2D).
template <class T>
ShiftInvertMap make_sparse_map(const BlockOperator<T>& L, cplx shift) {
  ShiftInvertMap M;
  M.n = L.size();
  M.shift = shift;
  Eigen::SparseMatrix<T> S = L.to_sparse();
  {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(S.rows());
    for (int c = 0; c < S.outerSize(); ++c)
      for (typename Eigen::SparseMatrix<T>::InnerIterator it(S, c); it; ++it) rows[it.row()] += std::abs(it.value());
    M.norm = rows.maxCoeff();
  }
  const bool real_path = std::is_same_v<T, double> && shift.imag() == 0.0;
  if (real_path) {
    Eigen::SparseMatrix<double> Ar = S.template cast<double>();
    Eigen::SparseMatrix<double> I(Ar.rows(), Ar.cols());
    I.setIdentity();
    Ar = Ar - shift.real() * I;
    Ar.makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(Ar);
    if (lu->info() != Eigen::Success) throw SingularShift("sparse LU failed at the requested shift");
    M.solve = [lu](CVec& x) {
      Eigen::VectorXd re = lu->solve(Eigen::VectorXd(x.real()));
      Eigen::VectorXd im = lu->solve(Eigen::VectorXd(x.imag()));
      x = re.cast<cplx>() + cplx(0, 1) * im.cast<cplx>();
    };
  } else {
    Eigen::SparseMatrix<cplx> Ac = S.template cast<cplx>();
    Eigen::SparseMatrix<cplx> I(Ac.rows(), Ac.cols());
    I.setIdentity();
    Ac = Ac - shift * I;
    Ac.makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>>();
    lu->compute(Ac);
    if (lu->info() != Eigen::Success) throw SingularShift("sparse LU failed at the requested shift");
    M.solve = [lu](CVec& x) { x = lu->solve(x); };
  }
  auto Sp = std::make_shared<Eigen::SparseMatrix<T>>(std::move(S));
  M.apply = [Sp](const CVec& x) { return CVec(Sp->template cast<cplx>() * x); };
  auto Lp = std::make_shared<BlockOperator<T>>(L);
  M.refactor = [Lp](cplx s) { return make_sparse_map(*Lp, s); };
  return M;
}

namespace detail {
// zlartg: [c s; -conj(s) c] [f; g] = [r; 0], c real.
inline void givens(cplx f, cplx g, double& c, cplx& s) {
  if (g == 0.0) { c = 1; s = 0; return; }
  if (f == 0.0) { c = 0; s = std::conj(g) / std::abs(g); return; }
  const double fa = std::abs(f), ga = std::abs(g), nrm = std::hypot(fa, ga);
  c = fa / nrm;
  s = (f / fa) * std::conj(g) / nrm;
}

// x <- c x + s y, y <- c y - conj(s) x
template <class A, class B>
inline void rot(A&& x, B&& y, double c, cplx s) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const cplx t = c * x[i] + s * y[i];
    y[i] = c * y[i] - std::conj(s) * x[i];
    x[i] = t;
  }
}

/// Swap diagonal entries k, k+1 of upper triangular T, updating Z (ztrexc).
inline void swap_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Z, Eigen::Index k) {
  const Eigen::Index n = T.rows();
  const cplx t11 = T(k, k), t22 = T(k + 1, k + 1);
  double c;
  cplx s;
  givens(T(k, k + 1), t22 - t11, c, s);
  if (k + 2 < n) rot(T.row(k).tail(n - k - 2).transpose(), T.row(k + 1).tail(n - k - 2).transpose(), c, s);
  if (k > 0) rot(T.col(k).head(k), T.col(k + 1).head(k), c, std::conj(s));
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  rot(Z.col(k), Z.col(k + 1), c, std::conj(s));
}

inline bool nearer(cplx a, cplx b, cplx sigma) {
  const double da = std::abs(a - sigma), db = std::abs(b - sigma);
  if (da != db) return da < db;
  if (a.imag() != b.imag()) return a.imag() < b.imag();
  return a.real() < b.real();
}

/// Eigenvector of upper triangular T for T(i,i) (back substitution).
inline Eigen::VectorXcd triangular_eigvec(const Eigen::MatrixXcd& T, Eigen::Index i) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(T.rows());
  y[i] = 1.0;
  const double small = std::numeric_limits<double>::epsilon() * std::max(T.norm(), 1e-300);
  for (Eigen::Index r = i - 1; r >= 0; --r) {
    cplx s = 0;
    for (Eigen::Index c = r + 1; c <= i; ++c) s += T(r, c) * y[c];
    cplx d = T(r, r) - T(i, i);
    if (std::abs(d) < small) d = small;
    y[r] = -s / d;
  }
  return y;
}
/// Inverse iteration at the Ritz value, Rayleigh quotient update.
inline void polish(const ShiftInvertMap& op, CVec& x, cplx& lam, double& r, double limit) {
  for (int it = 0; it < 3 && !(r <= limit); ++it) {
    const cplx s = lam + cplx(1e-9, 1e-9) * (1.0 + std::abs(lam));
    ShiftInvertMap near;
    try {
      near = op.refactor(s);
    } catch (const SingularShift&) {
      near = op.refactor(s + cplx(1e-7, 0.0));
    }
    CVec y = x;
    near.solve(y);
    y.normalize();
    const CVec Ay = op.apply(y);
    const cplx l2 = y.dot(Ay);
    const double r2 = (Ay - l2 * y).norm();
    if (!(r2 < r)) break;
    x = y;
    lam = l2;
    r = r2;
  }
}
}  // namespace detail

/// Shift-invert Krylov-Schur for the `count` eigenvalues nearest `shift`.
/// Modified Gram-Schmidt with one reorthogonalisation pass, thick restart on
/// the reordered Schur form; eigenvalues ordered by |lam - shift|, then
/// (Im, Re).
inline SpectrumResult krylov_schur(const ShiftInvertMap& op, const EigenRequest& req) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.n);
  if (req.count < 1 || !(req.tol > 0)) throw UsageError("eigen request needs count >= 1 and tol > 0");
  const Eigen::Index nev = std::min<Eigen::Index>(req.count, n - 2);
  const Eigen::Index mdim = std::min<Eigen::Index>(4 * nev + 20, n - 1);
  const Eigen::Index keep_dim = std::min<Eigen::Index>(mdim - 1, nev + (mdim - nev) / 2);
  const double eps = std::numeric_limits<double>::epsilon();
  const double inner_tol = 1e-2 * req.tol;

  Eigen::MatrixXcd V(n, mdim + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(mdim + 1, mdim);
  {
    CVec v0(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v0[i] = cplx(1.0 + 0.5 * std::sin(0.7 * i + 0.3), 0.25 * std::cos(1.3 * i + 0.1));
    V.col(0) = v0.normalized();
  }

  Eigen::Index k = 0;  // current locked/kept dimension
  std::vector<cplx> theta;
  Eigen::MatrixXcd T, Z;
  bool converged = false;
  for (int restart = 0; restart <= req.max_restart; ++restart) {
    for (Eigen::Index j = k; j < mdim; ++j) {
      CVec w = V.col(j);
      op.solve(w);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i <= j; ++i) {
          const cplx h = V.col(i).dot(w);
          w -= h * V.col(i);
          H(i, j) += h;
        }
      double beta = w.norm();
      if (beta <= eps * H.col(j).head(j + 1).norm()) {
        // invariant subspace: continue with a fresh orthogonal direction
        CVec r(n);
        for (Eigen::Index i = 0; i < n; ++i) r[i] = cplx(std::cos(1.7 * i + j), std::sin(0.9 * i + 2.0 * j));
        for (int pass = 0; pass < 2; ++pass)
          for (Eigen::Index i = 0; i <= j; ++i) r -= V.col(i).dot(r) * V.col(i);
        V.col(j + 1) = r.normalized();
        H(j + 1, j) = 0.0;
      } else {
        V.col(j + 1) = w / beta;
        H(j + 1, j) = beta;
      }
    }

    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.topLeftCorner(mdim, mdim));
    T = schur.matrixT();
    Z = schur.matrixU();
    // selection sort by largest |theta| (nearest the shift)
    for (Eigen::Index target = 0; target < mdim; ++target) {
      Eigen::Index best = target;
      for (Eigen::Index i = target + 1; i < mdim; ++i) {
        const cplx a = op.shift + 1.0 / T(i, i), b = op.shift + 1.0 / T(best, best);
        if (detail::nearer(a, b, op.shift)) best = i;
      }
      for (Eigen::Index i = best; i > target; --i) detail::swap_schur(T, Z, i - 1);
    }
    Eigen::RowVectorXcd b = H(mdim, mdim - 1) * Z.row(mdim - 1);
    const double tmax = std::abs(T(0, 0));
    converged = true;
    for (Eigen::Index i = 0; i < nev; ++i)
      if (std::abs(b[i]) > std::max(inner_tol * std::abs(T(i, i)), 100.0 * eps * tmax)) converged = false;
    if (converged || restart == req.max_restart) break;

    // thick restart on the leading keep_dim Schur vectors
    k = keep_dim;
    Eigen::MatrixXcd Vk = V.leftCols(mdim) * Z.leftCols(k);
    V.leftCols(k) = Vk;
    V.col(k) = V.col(mdim);
    H.setZero();
    H.topLeftCorner(k, k) = T.topLeftCorner(k, k);
    H.row(k).head(k) = b.head(k);
  }
  if (!converged)
    throw ConvergenceFailure("Krylov-Schur did not converge in " + std::to_string(req.max_restart) + " restarts");

  SpectrumResult res;
  res.operator_norm = op.norm;
  const double limit = req.tol * std::max(1.0, op.norm);
  Eigen::MatrixXcd X(n, nev);
  for (Eigen::Index i = 0; i < nev; ++i) {
    const Eigen::VectorXcd y = detail::triangular_eigvec(T, i);
    CVec x = V.leftCols(mdim) * (Z * y);
    x.normalize();
    cplx lam = op.shift + 1.0 / T(i, i);
    double r = (op.apply(x) - lam * x).norm();
    if (!(r <= limit) && op.refactor) detail::polish(op, x, lam, r, limit);
    if (!(r <= limit))
      throw ConvergenceFailure("Ritz pair near " + std::to_string(lam.real()) + "+" + std::to_string(lam.imag()) +
                               "i has residual " + std::to_string(r));
    res.eigenvalues.push_back(lam);
    res.residuals.push_back(r);
    X.col(i) = x;
  }
  // stable final ordering
  std::vector<Eigen::Index> idx(nev);
  for (Eigen::Index i = 0; i < nev; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index c) {
    return detail::nearer(res.eigenvalues[a], res.eigenvalues[c], op.shift);
  });
  SpectrumResult out;
  out.operator_norm = res.operator_norm;
  Eigen::MatrixXcd Xs(n, nev);
  for (Eigen::Index i = 0; i < nev; ++i) {
    out.eigenvalues.push_back(res.eigenvalues[idx[i]]);
    out.residuals.push_back(res.residuals[idx[i]]);
    Xs.col(i) = X.col(idx[i]);
  }
  if (req.want_vectors) out.eigenvectors = std::move(Xs);
  return out;
}

template <class T>
SpectrumResult shift_invert_arnoldi(const BlockOperator<T>& op, const EigenRequest& req) {
  return krylov_schur(make_block_map(op, req.shift), req);
}

template <class T>
SpectrumResult shift_invert_arnoldi(const BandedMatrix<T>& op, const EigenRequest& req) {
  if (!op.square()) throw MeshMismatch("shift_invert_arnoldi needs a square matrix");
  return krylov_schur(make_banded_map(op, req.shift), req);
}

template <class T>
SpectrumResult shift_invert_arnoldi_sparse(const BlockOperator<T>& op, const EigenRequest& req) {
  return krylov_schur(make_sparse_map(op, req.shift), req);
}

/// Retry once with the shift perturbed by 1e-3 (1 + |shift|) if it hits an eigenvalue.
template <class Op>
SpectrumResult shift_invert_arnoldi_retry(const Op& op, EigenRequest req) {
  try {
    return shift_invert_arnoldi(op, req);
  } catch (const SingularShift&) {
    req.shift += 1e-3 * (1.0 + std::abs(req.shift));
    return shift_invert_arnoldi(op, req);
  }
}

// ---------------------------------------------------------------------------
// Classification and pairing.

struct ClassifyOptions {
  double tol_zero = 0.01;
  double tol_axis = 1e-6;
  double band_edge = 1.0;
  double band_margin = 1e-2;
};

/// Zero-cluster radius: dr away from p_c, (dr^2)^{1/4} within 0.05 of p_c where
/// the zero Jordan block grows to size 4.
inline double default_tol_zero(double dr, double p, double p_c) {
  return std::abs(p - p_c) <= 0.05 ? std::sqrt(dr) : dr;
}

inline SpectralClass classify(cplx z, const ClassifyOptions& o) {
  const double a = std::abs(z);
  if (a <= o.tol_zero) return SpectralClass::zero;
  const double axis = o.tol_axis * (1.0 + a);
  if (std::abs(z.real()) <= axis)
    return std::abs(z.imag()) >= o.band_edge - o.band_margin ? SpectralClass::continuous_band
                                                               : SpectralClass::imaginary_pair;
  if (std::abs(z.imag()) <= axis) return SpectralClass::real_pair;
  return SpectralClass::complex_quadruple;
}

inline std::vector<SpectralClass> classify_spectrum(const std::vector<cplx>& raw, const ClassifyOptions& o) {
  std::vector<SpectralClass> c;
  c.reserve(raw.size());
  for (cplx z : raw) c.push_back(classify(z, o));
  return c;
}

inline void classify_spectrum(SpectrumResult& r, const ClassifyOptions& o) {
  r.classifications = classify_spectrum(r.eigenvalues, o);
}

/// Which reflections the spectrum is closed under.
struct PairingSymmetry {
  bool negate = true;     ///< lam -> -lam
  bool conjugate = true;  ///< lam -> conj(lam)
};

/// Eigenvalues whose partners should lie strictly inside the disc of radius
/// `radius` around `center` but are missing (to within tol (1 + |lam|)).
/// Members of the zero cluster are skipped.
inline std::vector<cplx> pairing_violations(const std::vector<cplx>& ev, const std::vector<SpectralClass>& cls,
                                            cplx center, double radius, PairingSymmetry sym, double tol) {
  std::vector<cplx> bad;
  auto present = [&](cplx w) {
    for (cplx z : ev)
      if (std::abs(z - w) <= tol * (1.0 + std::abs(w))) return true;
    return false;
  };
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (!cls.empty() && cls[i] == SpectralClass::zero) continue;
    std::vector<cplx> partners;
    if (sym.negate) partners.push_back(-ev[i]);
    if (sym.conjugate) partners.push_back(std::conj(ev[i]));
    if (sym.negate && sym.conjugate) partners.push_back(-std::conj(ev[i]));
    for (cplx w : partners)
      if (std::abs(w - center) < radius * (1.0 - 1e-9) && !present(w)) {
        bad.push_back(ev[i]);
        break;
      }
  }
  return bad;
}

/// Attach pairing diagnostics for a nearest-shift result.
inline void attach_pairing(SpectrumResult& r, cplx shift, PairingSymmetry sym, double tol) {
  double radius = 0;
  for (cplx z : r.eigenvalues) radius = std::max(radius, std::abs(z - shift));
  r.pairing_violations = pairing_violations(r.eigenvalues, r.classifications, shift, radius, sym, tol);
}

/// Reflection lam -> -conj(lam) only (the L_{m,k} symmetry about the imaginary axis).
inline std::vector<cplx> mirror_violations(const std::vector<cplx>& ev, const std::vector<SpectralClass>& cls,
                                           cplx center, double radius, double tol) {
  std::vector<cplx> bad;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (!cls.empty() && cls[i] == SpectralClass::zero) continue;
    const cplx w = -std::conj(ev[i]);
    if (std::abs(w - center) >= radius * (1.0 - 1e-9)) continue;
    bool found = false;
    for (cplx z : ev)
      if (std::abs(z - w) <= tol * (1.0 + std::abs(w))) found = true;
    if (!found) bad.push_back(ev[i]);
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Window search along the imaginary axis.

struct WindowOptions {
  double y_max = 0.95;        ///< cover |Im lam| <= y_max
  int count = 14;             ///< eigenvalues per shift
  int max_count = 200;
  double real_offset = 1e-3;  ///< keeps shifts off the imaginary axis
  bool both_sides = true;
  double tol = 1e-10;
};

/// Eigenvalues from a sequence of shifts i*y (+ real_offset), each accepted
/// only strictly inside its own covered disc and not inside an earlier disc,
/// so multiplicities survive. `factory(shift)` returns the shift-invert map.
inline std::vector<cplx> window_search(const std::function<ShiftInvertMap(cplx)>& factory,
                                       const WindowOptions& o, std::vector<double>* residuals = nullptr) {
  struct Disc { cplx c; double r; };
  std::vector<Disc> discs;
  std::vector<cplx> out;
  auto run = [&](double y) -> double {
    int count = o.count;
    cplx shift(o.real_offset, y);
    for (;;) {
      EigenRequest req;
      req.shift = shift;
      req.count = count;
      req.tol = o.tol;
      SpectrumResult r;
      try {
        r = krylov_schur(factory(shift), req);
      } catch (const SingularShift&) {
        shift += 1e-3;
        continue;
      }
      double radius = 0;
      for (cplx z : r.eigenvalues) radius = std::max(radius, std::abs(z - shift));
      // need a usable disc: at least reach a bit along the axis
      if (radius < 0.02 && count < o.max_count) {
        count = std::min(2 * count, o.max_count);
        continue;
      }
      const double rin = radius * (1.0 - 1e-9);
      for (std::size_t i = 0; i < r.size(); ++i) {
        const cplx z = r.eigenvalues[i];
        if (std::abs(z - shift) >= rin) continue;
        bool seen = false;
        for (const Disc& d : discs)
          if (std::abs(z - d.c) < d.r) seen = true;
        if (seen) continue;
        out.push_back(z);
        if (residuals) residuals->push_back(r.residuals[i]);
      }
      discs.push_back({shift, rin});
      return rin;
    }
  };
  const double r0 = run(0.0);
  for (int side = 0; side < (o.both_sides ? 2 : 1); ++side) {
    const double sgn = side == 0 ? 1.0 : -1.0;
    double reach = r0;
    while (reach < o.y_max) {
      const double y = reach;
      const double rr = run(sgn * y);
      reach = y + 0.9 * rr;
    }
  }
  return out;
}

}  // namespace nls_spectra
