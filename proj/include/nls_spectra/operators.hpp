#pragma once

#include <cmath>
#include <ostream>
#include <iomanip>
#include <string>

#include "block.hpp"
#include "ground_state.hpp"
#include "oracle.hpp"

namespace nls_spectra {

enum class PlusMinus { plus, minus };

/// raw: the finite-difference matrix as assembled (nonsymmetric for n >= 2);
/// symmetrized: conjugated by a positive diagonal so that it is symmetric.
enum class OperatorForm { raw, symmetrized };

struct Symmetrized {
  BandedOperator op;
  Vec scaling;  ///< op = D A D^{-1}, D = diag(scaling)
};

/// Diagonal similarity making a tridiagonal matrix with same-sign
/// off-diagonal pairs symmetric. A pair with a zero member decouples.
inline Symmetrized symmetrize_tridiagonal(const BandedOperator& A) {
  if (A.lower_bandwidth() > 1 || A.upper_bandwidth() > 1 || !A.square())
    throw MeshMismatch("symmetrize_tridiagonal needs a square tridiagonal matrix");
  const std::size_t n = A.rows();
  Symmetrized s{BandedOperator(n, n, 1, 1), Vec::Ones(n)};
  for (std::size_t i = 0; i < n; ++i) s.op.ref(i, i) = A(i, i);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double up = A(i, i + 1), lo = A(i + 1, i);
    if (up == 0.0 || lo == 0.0 || (up > 0) != (lo > 0)) {
      s.scaling[i + 1] = s.scaling[i];
      continue;
    }
    const double off = (up > 0 ? 1.0 : -1.0) * std::sqrt(up * lo);
    s.op.ref(i, i + 1) = off;
    s.op.ref(i + 1, i) = off;
    s.scaling[i + 1] = s.scaling[i] * std::sqrt(lo / up);
  }
  return s;
}

namespace detail {
inline void require_mesh(const GroundStateProfile& prof, const RadialMesh& mesh) {
  if (!prof.mesh.same_grid(mesh)) throw MeshMismatch("profile was computed on a different mesh");
}
inline void require_1d(const RadialMesh& mesh) {
  if (mesh.dim != 1) throw DimensionUnsupported("operator is defined for n = 1 only");
}
inline Vec potential(const GroundStateProfile& prof) {
  Vec v(prof.values.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::pow(std::max(prof.values[i], 0.0), prof.p - 1.0);
  return v;
}
inline Vec log_profile(const Vec& q) {
  Vec l(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0)) throw UnsupportedProfile("factor S(a) needs a strictly positive profile");
    l[i] = std::log(q[i]);
  }
  return l;
}
}  // namespace detail

/// -Delta + 1 + c * V on the given mesh (angular term m^2/r^2 included).
inline BandedOperator schrodinger(const RadialMesh& mesh, double m_squared, const Vec& V, double c) {
  return radial_laplacian_msq(mesh, m_squared).shifted(1.0).plus_diagonal(Vec(c * V));
}

/// L+ = -Delta + 1 - p Q^{p-1}, L- = -Delta + 1 - Q^{p-1}.
inline BandedOperator build_L_plus_minus(const GroundStateProfile& prof, const RadialMesh& mesh,
                                         PlusMinus which, OperatorForm form = OperatorForm::symmetrized) {
  detail::require_mesh(prof, mesh);
  if (prof.m != 0) throw UnsupportedProfile("L+/L- are built around the radial ground state (m = 0)");
  const double c = which == PlusMinus::plus ? -prof.p : -1.0;
  BandedOperator A = schrodinger(mesh, 0.0, detail::potential(prof), c);
  if (form == OperatorForm::symmetrized && mesh.dim >= 2) return symmetrize_tridiagonal(A).op;
  return A;
}

/// calL = [0, L-; -L+, 0] acting on [u; w].
inline BlockOperator<double> build_cal_L(const GroundStateProfile& prof, const RadialMesh& mesh,
                                         OperatorForm form = OperatorForm::raw) {
  const BandedOperator Lp = build_L_plus_minus(prof, mesh, PlusMinus::plus, form);
  const BandedOperator Lm = build_L_plus_minus(prof, mesh, PlusMinus::minus, form);
  BlockOperator<double> L(2, mesh.unknowns());
  L.set(0, 1, Lm);
  L.set(1, 0, Lp * -1.0);
  return L;
}

/// Hierarchy operator L_j = -d^2 + 1 - k_{j-1} k_j (2/(p+1)) Q^{p-1} (n = 1, any real j).
inline BandedOperator build_hierarchy_Lj(const GroundStateProfile& prof, const RadialMesh& mesh, double j) {
  detail::require_1d(mesh);
  detail::require_mesh(prof, mesh);
  const double p = prof.p;
  const double c = -oracle::k_of(p, j - 1.0) * oracle::k_of(p, j) * 2.0 / (p + 1.0);
  return schrodinger(mesh, 0.0, detail::potential(prof), c);
}

/// Staggered first-order factor S(a) = g d/dx g^{-1}, g = Q^a, from samples of
/// log Q on a uniform grid of spacing h. Maps the n grid values to the n-1
/// midpoints: (S u)_{i+1/2} = (sqrt(g_i/g_{i+1}) u_{i+1} - sqrt(g_{i+1}/g_i) u_i) / h.
/// Its transpose is the adjoint S(a)* = -g^{-1} d/dx g.
inline BandedOperator staggered_factor(const Vec& logQ, double h, double a) {
  const std::size_t n = logQ.size();
  BandedOperator S(n - 1, n, 0, 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = a * (logQ[i + 1] - logQ[i]) / 2.0;
    S.ref(i, i) = -std::exp(d) / h;
    S.ref(i, i + 1) = std::exp(-d) / h;
  }
  return S;
}

/// S_j = S(k_j) on the profile's grid (n = 1).
inline BandedOperator build_factor_Sj(const GroundStateProfile& prof, const RadialMesh& mesh, double j) {
  detail::require_1d(mesh);
  detail::require_mesh(prof, mesh);
  return staggered_factor(detail::log_profile(prof.values), mesh.dr, oracle::k_of(prof.p, j));
}

/// H = S L+ S* with S = S_1 = Q d/dx Q^{-1}; pentadiagonal, symmetric, on the
/// midpoint grid.
inline BandedOperator build_H(const GroundStateProfile& prof, const RadialMesh& mesh) {
  detail::require_1d(mesh);
  detail::require_mesh(prof, mesh);
  const BandedOperator S = build_factor_Sj(prof, mesh, 1.0);
  const BandedOperator Lp = build_L_plus_minus(prof, mesh, PlusMinus::plus);
  return S * Lp * S.adjoint();
}

/// Schrodinger operator -d^2 + 1 + c Q^{p-1} on a line grid with Dirichlet
/// ends, from log Q samples.
inline BandedOperator line_schrodinger_from_log(const Vec& logQ, double h, double p, double c) {
  const std::size_t n = logQ.size();
  BandedOperator A(n, n, 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    A.ref(i, i) = 2.0 / (h * h) + 1.0 + c * std::exp((p - 1.0) * logQ[i]);
    if (i > 0) A.ref(i, i - 1) = -1.0 / (h * h);
    if (i + 1 < n) A.ref(i, i + 1) = -1.0 / (h * h);
  }
  return A;
}

/// ||(S_j (L_{j-1} - lam_j) S_j* - S_j* (L_{j+2} - lam_j) S_j) v|| (discrete L2)
/// with v given on the midpoint grid. logQ_nodes has n entries, logQ_mid the
/// n-1 midpoint values. The left side uses factors nodes -> midpoints, the
/// right side factors midpoints -> interior nodes, so both act on midpoint data.
inline double mirror_identity_residual_from_log(double p, double h, const Vec& logQ_nodes,
                                                const Vec& logQ_mid, double j, const Vec& v) {
  const std::size_t n = logQ_nodes.size();
  if (static_cast<std::size_t>(logQ_mid.size()) != n - 1 || static_cast<std::size_t>(v.size()) != n - 1)
    throw MeshMismatch("mirror identity: midpoint data must have n-1 entries");
  const double kj = oracle::k_of(p, j);
  const double lam = oracle::lambda_of(p, j);
  auto coeff = [p](double jj) { return -oracle::k_of(p, jj - 1.0) * oracle::k_of(p, jj) * 2.0 / (p + 1.0); };

  const BandedOperator S1 = staggered_factor(logQ_nodes, h, kj);
  const BandedOperator Lleft = line_schrodinger_from_log(logQ_nodes, h, p, coeff(j - 1.0)).shifted(-lam);
  const Vec lhs = S1.apply(Lleft.apply(Vec(S1.adjoint().apply(v))));

  const BandedOperator S2 = staggered_factor(logQ_mid, h, kj);
  const Vec inner = logQ_nodes.segment(1, n - 2);
  const BandedOperator Lright = line_schrodinger_from_log(inner, h, p, coeff(j + 2.0)).shifted(-lam);
  const Vec rhs = S2.adjoint().apply(Lright.apply(Vec(S2.apply(v))));
  return std::sqrt(h) * (lhs - rhs).norm();
}

/// Profile-based wrapper: midpoint log Q by averaging neighbouring logs.
inline double apply_mirror_identity_residual(const GroundStateProfile& prof, const RadialMesh& mesh,
                                             double j, const Vec& v) {
  detail::require_1d(mesh);
  detail::require_mesh(prof, mesh);
  const Vec l = detail::log_profile(prof.values);
  const Eigen::Index n = l.size();
  Vec mid = 0.5 * (l.head(n - 1) + l.tail(n - 1));
  return mirror_identity_residual_from_log(prof.p, mesh.dr, l, mid, j, v);
}

namespace detail {
inline void require_sector(const GroundStateProfile& prof, const RadialMesh& mesh) {
  if (prof.n != 2 || mesh.dim != 2) throw UnsupportedProfile("sector operators need n = 2");
  require_mesh(prof, mesh);
  if (mesh.origin_rule == OriginRule::symmetry_ghost)
    throw OriginRuleMismatch("sector operators need r > 0 on every node");
}
}  // namespace detail

/// Restriction of calL to X_k (k >= 0) around phi e^{i m theta}.
/// k = 0: [[0, H0+V], [-H0+V, 0]] on [a1, a2];
/// k > 0: 4x4 blocks on [a1, a2, b1, b2] with H_{+-k} and V.
inline BlockOperator<double> build_sector_LXk(const GroundStateProfile& prof, const RadialMesh& mesh, int k) {
  detail::require_sector(prof, mesh);
  if (k < 0) throw OutOfRange("X_k sectors use k >= 0");
  const double p = prof.p;
  const Vec pot = detail::potential(prof);
  const Vec V = 0.5 * (p - 1.0) * pot;
  auto Hk = [&](int kk) {
    const double s = prof.m + kk;
    return schrodinger(mesh, s * s, pot, -0.5 * (p + 1.0));
  };
  const std::size_t N = mesh.unknowns();
  if (k == 0) {
    const BandedOperator H0 = Hk(0);
    BlockOperator<double> L(2, N);
    L.set(0, 1, H0.plus_diagonal(V));
    L.set(1, 0, (H0 * -1.0).plus_diagonal(V));
    return L;
  }
  const BandedOperator Hp = Hk(k), Hm = Hk(-k);
  BlockOperator<double> L(4, N);
  L.set(0, 1, Hp);
  L.set(0, 3, V);
  L.set(1, 0, Hp * -1.0);
  L.set(1, 2, V);
  L.set(2, 1, V);
  L.set(2, 3, Hm);
  L.set(3, 0, V);
  L.set(3, 2, Hm * -1.0);
  return L;
}

/// L_{m,k} = [[-2imk/r^2, B - phi^{p-1}], [-(B - p phi^{p-1}), -2imk/r^2]],
/// B = -Delta_r + 1 + (m^2 + k^2)/r^2, for any integer k.
inline BlockOperator<cplx> build_sector_Lmk(const GroundStateProfile& prof, const RadialMesh& mesh, int k) {
  detail::require_sector(prof, mesh);
  const double p = prof.p;
  const double m = prof.m;
  const Vec pot = detail::potential(prof);
  const double msq = m * m + static_cast<double>(k) * k;
  const BandedOperator top = schrodinger(mesh, msq, pot, -1.0);
  const BandedOperator bottom = schrodinger(mesh, msq, pot, -p) * -1.0;
  const Vec r = mesh.coords();
  CVec d(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) d[i] = cplx(0.0, -2.0 * m * k / (r[i] * r[i]));
  BlockOperator<cplx> L(2, mesh.unknowns());
  L.set(0, 0, d);
  L.set(0, 1, top.cast<cplx>());
  L.set(1, 0, bottom.cast<cplx>());
  L.set(1, 1, d);
  return L;
}

/// Full polar linearisation around phi(r) e^{i m theta} acting on
/// [Re h; Im h] over the N x T grid (theta-contiguous ordering).
inline BlockOperator<double> build_full2d_L(const GroundStateProfile& prof, const RadialMesh& mesh2d) {
  if (!mesh2d.angular_points) throw InvalidMesh("full 2D operator needs angular_points");
  if (prof.n != 2) throw UnsupportedProfile("full 2D operator needs n = 2");
  RadialMesh radial = mesh2d;
  radial.angular_points.reset();
  detail::require_mesh(prof, radial);
  const BandedOperator A = build_full_2d_laplacian(mesh2d).shifted(1.0);
  const std::size_t N = mesh2d.unknowns();
  const std::size_t T = static_cast<std::size_t>(*mesh2d.angular_points);
  const double p = prof.p;
  const Vec pot = detail::potential(prof);
  Vec d11(N * T), d12(N * T), d21(N * T), d22(N * T);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t t = 0; t < T; ++t) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(T);
      const double c = std::cos(prof.m * th), s = std::sin(prof.m * th);
      const std::size_t idx = i * T + t;
      d11[idx] = -pot[i] * (p - 1.0) * c * s;
      d12[idx] = -pot[i] * (c * c + p * s * s);
      d21[idx] = pot[i] * (p * c * c + s * s);
      d22[idx] = pot[i] * (p - 1.0) * c * s;
    }
  BlockOperator<double> L(2, N * T);
  L.set(0, 0, d11);
  L.set(0, 1, A.plus_diagonal(d12));
  L.set(1, 0, (A * -1.0).plus_diagonal(d21));
  L.set(1, 1, d22);
  return L;
}

/// Coordinate text export: one "row,col,real,imag" line per stored nonzero.
template <class T>
void write_coo(std::ostream& os, const BandedMatrix<T>& A) {
  os << "row,col,real,imag\n" << std::setprecision(17);
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = A.col_begin(i); j < A.col_end(i); ++j) {
      const std::complex<double> v(A(i, j));
      if (v != 0.0) os << i << ',' << j << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

template <class T>
void write_coo(std::ostream& os, const BlockOperator<T>& L) {
  const auto S = L.to_sparse();
  os << "row,col,real,imag\n" << std::setprecision(17);
  for (int c = 0; c < S.outerSize(); ++c)
    for (typename Eigen::SparseMatrix<T>::InnerIterator it(S, c); it; ++it) {
      const std::complex<double> v(it.value());
      os << it.row() << ',' << it.col() << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

}  // namespace nls_spectra
