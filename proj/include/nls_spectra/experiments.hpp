#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "eigensolver.hpp"
#include "operators.hpp"
#include "oracle.hpp"

namespace nls_spectra {

// ---------------------------------------------------------------------------
// Meshes and small helpers.

/// Line mesh for n = 1, ghost-point radial mesh otherwise.
inline RadialMesh default_mesh(int n, double r_max = 30.0, double dr = 0.01) {
  return RadialMesh::make(n, r_max, dr, OriginRule::symmetry_ghost);
}

/// Cell-centred polar mesh used by the sector operators and m >= 1 profiles.
inline RadialMesh sector_mesh(double r_max = 30.0, double dr = 0.01) {
  return RadialMesh::make(2, r_max, dr, OriginRule::cell_centered);
}

/// Worker count: NLS_SPECTRA_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* e = std::getenv("NLS_SPECTRA_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on up to worker_count() threads. The
/// first exception (lowest index) is rethrown after all workers finish.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned nt = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {
inline std::vector<cplx> sorted_by_modulus(std::vector<cplx> v) {
  std::stable_sort(v.begin(), v.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  return v;
}

/// The pair nearest the origin after skipping the two gauge/scaling zeros:
/// sorts the four eigenvalues nearest 0 by modulus and returns the largest.
inline cplx bifurcating_eigenvalue(const SpectrumResult& r) {
  std::vector<cplx> v = sorted_by_modulus(r.eigenvalues);
  if (v.size() < 4) throw ConvergenceFailure("need four eigenvalues near the origin");
  return v[3];
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Radial spectra of calL, L+-, H.

/// Eigenvalues of calL nearest `shift`, classified, with pairing diagnostics.
inline SpectrumResult cal_L_spectrum(const GroundStateProfile& prof, int count, cplx shift = cplx(0.02, 0.0),
                                     double tol = 1e-10) {
  const BlockOperator<double> L = build_cal_L(prof, prof.mesh);
  EigenRequest req;
  req.shift = shift;
  req.count = count;
  req.tol = tol;
  SpectrumResult r = shift_invert_arnoldi_retry(L, req);
  ClassifyOptions co;
  co.tol_zero = default_tol_zero(prof.mesh.dr, prof.p, p_critical(prof.n));
  classify_spectrum(r, co);
  attach_pairing(r, req.shift, PairingSymmetry{}, 1e-6);
  r.parameters = {prof.n, prof.p, prof.m, std::nullopt, prof.mesh.summary()};
  return r;
}

/// mu-spectrum of H = S L+ S* below `cutoff` (n = 1).
inline SpectrumResult H_spectrum(const GroundStateProfile& prof, double cutoff = 1.0, bool vectors = false) {
  SpectrumResult r = symmetric_eigs_below(build_H(prof, prof.mesh), cutoff, 1e-10, vectors);
  r.parameters = {prof.n, prof.p, prof.m, std::nullopt, prof.mesh.summary()};
  return r;
}

/// mu values -lam^2 of the non-band calL eigenvalues, one per +-lam pair,
/// zero cluster collapsed to a single 0.
inline std::vector<double> mu_from_cal_L(const SpectrumResult& r) {
  std::vector<double> mu;
  bool zero = false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const cplx z = r.eigenvalues[i];
    switch (r.classifications[i]) {
      case SpectralClass::zero: zero = true; break;
      case SpectralClass::imaginary_pair:
        if (z.imag() > 0) mu.push_back(z.imag() * z.imag());
        break;
      case SpectralClass::real_pair:
        if (z.real() > 0) mu.push_back(-z.real() * z.real());
        break;
      default: break;
    }
  }
  if (zero) mu.push_back(0.0);
  std::sort(mu.begin(), mu.end());
  return mu;
}

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepSpec {
  int n = 1;
  int m = 0;
  std::vector<double> p_values;
  std::vector<std::string> operator_kinds{"calL", "Lplus", "Lminus"};
  double r_max = 30.0;
  double dr = 0.01;
  int eig_count = 12;
  cplx shift{0.02, 0.0};
  int k_from = 0, k_to = 0;  ///< sector range for "sector" kind
  SolverOptions solver;
};

struct SweepRow {
  double p;
  std::string op;
  int k = 0;
  int index;
  cplx value;
  SpectralClass cls;
  double residual;
  double ground_state_residual;
  bool degraded;
};

struct SweepDataset {
  SweepSpec spec;
  std::vector<SweepRow> rows;
  bool empty() const { return rows.empty(); }
};

inline void validate(const SweepSpec& s) {
  if (s.p_values.empty()) throw UsageError("sweep needs at least one p value");
  for (std::size_t i = 0; i < s.p_values.size(); ++i) {
    const double p = s.p_values[i];
    if (!(p > 1.0) || !(p < p_max(s.n))) throw InvalidExponent("sweep p = " + std::to_string(p) + " out of range");
    if (i > 0 && !(p > s.p_values[i - 1])) throw UsageError("sweep p values must be strictly increasing");
  }
  if (s.eig_count < 1) throw UsageError("eig_count must be >= 1");
  for (const auto& k : s.operator_kinds)
    if (k != "calL" && k != "Lplus" && k != "Lminus" && k != "H" && k != "sector")
      throw UsageError("unknown operator kind '" + k + "'");
}

namespace detail {
inline void append_rows(std::vector<SweepRow>& out, double p, const std::string& op, int k,
                        const SpectrumResult& r, double gs_res, double gs_tol) {
  const double limit = 1e-10 * std::max(1.0, r.operator_norm);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const SpectralClass c = r.classifications.empty() ? SpectralClass::real_pair : r.classifications[i];
    out.push_back({p, op, k, static_cast<int>(i), r.eigenvalues[i], c, r.residuals[i], gs_res,
                   !(r.residuals[i] <= limit) || !(gs_res <= gs_tol)});
  }
}
}  // namespace detail

/// Per-p spectra; each p is an independent job (ground state recomputed),
/// rows emitted in p order.
inline SweepDataset run_sweep(const SweepSpec& spec) {
  validate(spec);
  std::vector<std::vector<SweepRow>> per(spec.p_values.size());
  parallel_for(spec.p_values.size(), [&](std::size_t i) {
    const double p = spec.p_values[i];
    try {
      const bool sector = std::find(spec.operator_kinds.begin(), spec.operator_kinds.end(), "sector") !=
                          spec.operator_kinds.end();
      std::vector<SweepRow>& rows = per[i];
      if (spec.m == 0) {
        const RadialMesh mesh = default_mesh(spec.n, spec.r_max, spec.dr);
        const GroundStateProfile prof = solve_ground_state(spec.n, p, 0, mesh, spec.solver);
        const double gr = prof.residual_inf;
        for (const auto& kind : spec.operator_kinds) {
          if (kind == "calL") {
            detail::append_rows(rows, p, kind, 0, cal_L_spectrum(prof, spec.eig_count, spec.shift), gr,
                                spec.solver.residual_tol);
          } else if (kind == "Lplus" || kind == "Lminus") {
            const auto which = kind == "Lplus" ? PlusMinus::plus : PlusMinus::minus;
            SpectrumResult r = symmetric_eigs_below(build_L_plus_minus(prof, mesh, which), 1.0);
            classify_spectrum(r, ClassifyOptions{1e-300});
            detail::append_rows(rows, p, kind, 0, r, gr, spec.solver.residual_tol);
          } else if (kind == "H" && spec.n == 1) {
            SpectrumResult r = H_spectrum(prof, 1.0);
            classify_spectrum(r, ClassifyOptions{1e-300});
            detail::append_rows(rows, p, kind, 0, r, gr, spec.solver.residual_tol);
          }
        }
      }
      if (sector) {
        if (spec.n != 2) throw UnsupportedProfile("sector sweeps need n = 2");
        const RadialMesh mesh = sector_mesh(spec.r_max, spec.dr);
        const GroundStateProfile prof = solve_ground_state(2, p, spec.m, mesh, spec.solver);
        ClassifyOptions co;
        co.tol_zero = default_tol_zero(spec.dr, p, p_critical(2));
        for (int k = spec.k_from; k <= spec.k_to; ++k) {
          EigenRequest req;
          req.shift = spec.shift;
          req.count = spec.eig_count;
          SpectrumResult r = shift_invert_arnoldi_retry(build_sector_Lmk(prof, mesh, k), req);
          classify_spectrum(r, co);
          detail::append_rows(rows, p, "sector", k, r, prof.residual_inf, spec.solver.residual_tol);
        }
      }
    } catch (const Error& e) {
      // keep the category, attach the offending p
      const std::string msg = std::string(e.what()) + " (at p = " + std::to_string(p) + ")";
      if (is_validation_error(e)) throw UsageError(msg);
      throw ConvergenceFailure(msg);
    }
  });
  SweepDataset ds{spec, {}};
  for (auto& r : per) ds.rows.insert(ds.rows.end(), r.begin(), r.end());
  return ds;
}

// ---------------------------------------------------------------------------
// Interlacing (n = 1).

struct InterlacingEntry {
  int j;
  double mu;  ///< mu_{j+1}
  oracle::InterlacingBounds bounds;
  double lower_margin, upper_margin;
  std::optional<double> sharper_margin;
  bool ok;
};

struct InterlacingReport {
  double p;
  int k;
  double r_max;
  std::vector<double> mu;  ///< H eigenvalues below 1
  std::vector<InterlacingEntry> entries;
  bool passed = true;
};

/// r_max grows as p -> 1 so the highest mu stays clear of the band edge.
inline double interlacing_r_max(double p) { return p < 1.4 ? 150.0 : 30.0; }

inline InterlacingReport verify_interlacing(double p, std::optional<double> r_max = std::nullopt,
                                            double dr = 0.01, bool throw_on_violation = false) {
  const auto k = oracle::interlacing_regime(p);
  if (!k) throw OutOfRange("p = " + std::to_string(p) + " has no interlacing regime (need p < 3)");
  InterlacingReport rep;
  rep.p = p;
  rep.k = *k;
  rep.r_max = r_max.value_or(interlacing_r_max(p));
  const RadialMesh mesh = default_mesh(1, rep.r_max, dr);
  const GroundStateProfile prof = solve_ground_state(1, p, 0, mesh);
  const SpectrumResult h = H_spectrum(prof, 1.0 + 1e-9);
  for (cplx z : h.eigenvalues) rep.mu.push_back(z.real());
  for (int j = 1; j <= *k; ++j) {
    InterlacingEntry e;
    e.j = j;
    e.bounds = oracle::interlacing_bounds(p, j);
    if (static_cast<std::size_t>(j) >= rep.mu.size()) {
      e.mu = std::numeric_limits<double>::quiet_NaN();
      e.lower_margin = e.upper_margin = -1;
      e.ok = false;
    } else {
      e.mu = rep.mu[j];
      e.lower_margin = e.mu - e.bounds.lower;
      e.upper_margin = e.bounds.upper - e.mu;
      e.ok = e.lower_margin > 0 && (e.bounds.upper_inclusive ? e.upper_margin >= 0 : e.upper_margin > 0);
      if (e.bounds.sharper_lower) {
        e.sharper_margin = e.mu - *e.bounds.sharper_lower;
        e.ok = e.ok && *e.sharper_margin >= 0;
      }
    }
    rep.passed = rep.passed && e.ok;
    rep.entries.push_back(e);
  }
  if (throw_on_violation && !rep.passed) {
    std::string msg = "interlacing violated at p = " + std::to_string(p) + ":";
    for (const auto& e : rep.entries)
      msg += " j=" + std::to_string(e.j) + " mu=" + std::to_string(e.mu) + " margins(" +
             std::to_string(e.lower_margin) + "," + std::to_string(e.upper_margin) + ")";
    throw InterlacingViolation(msg);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Variational quotient (u, L+ u) / (u, L-^{-1} u).

struct VariationalEntry {
  double mu;         ///< eigenvalue of L- L+ from calL
  double quotient;   ///< (u, L+ u)/(u, L-^{-1} u), L-^{-1} on Q-perp
  double orthogonality;  ///< |(u, Q)| / (|u| |Q|)
};

struct VariationalReport {
  int n;
  double p;
  std::vector<VariationalEntry> entries;
  double max_relative_error = 0;
};

namespace detail {
/// Solves [A q; q^T 0][y; s] = [b; 0] (symmetric A with near-kernel q).
inline Vec bordered_solve(const BandedOperator& A, const Vec& q, const Vec& b) {
  const std::size_t n = A.rows();
  Eigen::SparseMatrix<double> M(n + 1, n + 1);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = A.col_begin(i); j < A.col_end(i); ++j)
      if (A(i, j) != 0.0) t.emplace_back(i, j, A(i, j));
  for (std::size_t i = 0; i < n; ++i) {
    t.emplace_back(i, n, q[i]);
    t.emplace_back(n, i, q[i]);
  }
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(M);
  if (lu.info() != Eigen::Success) throw ProjectionFailure("bordered system is singular");
  Vec rhs(n + 1);
  rhs.head(n) = b;
  rhs[n] = 0;
  Vec y = lu.solve(rhs);
  return y.head(n);
}

/// Real vector spanning the same line as a complex eigenvector component.
inline Vec real_direction(const CVec& z) {
  cplx s = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += z[i] * z[i];
  const cplx phase = std::abs(s) > 0 ? std::sqrt(std::conj(s) / std::abs(s)) : cplx(1, 0);
  return (phase * z).real();
}
}  // namespace detail

/// For every non-zero, non-band mu of calL (symmetrised blocks), recompute mu
/// from its eigenvector through the variational quotient.
inline VariationalReport variational_consistency(int n, double p, double r_max = 30.0, double dr = 0.01) {
  const RadialMesh mesh = default_mesh(n, r_max, dr);
  const GroundStateProfile prof = solve_ground_state(n, p, 0, mesh);
  const BandedOperator Lm_raw = build_L_plus_minus(prof, mesh, PlusMinus::minus, OperatorForm::raw);
  const Symmetrized sym = n >= 2 ? symmetrize_tridiagonal(Lm_raw) : Symmetrized{Lm_raw, Vec::Ones(Lm_raw.rows())};
  const BandedOperator Lp = build_L_plus_minus(prof, mesh, PlusMinus::plus, OperatorForm::symmetrized);
  const BandedOperator& Lm = sym.op;
  const Vec Q = sym.scaling.cwiseProduct(prof.values);

  BlockOperator<double> L(2, mesh.unknowns());
  L.set(0, 1, Lm);
  L.set(1, 0, Lp * -1.0);
  EigenRequest req;
  req.shift = cplx(0.02, 0.0);
  req.count = 16;
  req.want_vectors = true;
  SpectrumResult r = shift_invert_arnoldi_retry(L, req);
  // real pairs may sit behind the discretised band; a real shift reaches them
  req.shift = cplx(3.0, 0.0);
  req.count = 4;
  const SpectrumResult far = shift_invert_arnoldi_retry(L, req);
  for (std::size_t i = 0; i < far.size(); ++i) {
    const cplx z = far.eigenvalues[i];
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z)) || z.real() < 0.5) continue;
    bool dup = false;
    for (cplx w : r.eigenvalues) dup = dup || std::abs(w - z) < 1e-8 * (1.0 + std::abs(z));
    if (dup) continue;
    const Eigen::Index c = r.eigenvectors->cols();
    r.eigenvectors->conservativeResize(Eigen::NoChange, c + 1);
    r.eigenvectors->col(c) = far.eigenvectors->col(i);
    r.eigenvalues.push_back(z);
    r.residuals.push_back(far.residuals[i]);
  }
  ClassifyOptions co;
  co.tol_zero = default_tol_zero(dr, p, p_critical(n));
  classify_spectrum(r, co);

  VariationalReport rep{n, p, {}, 0};
  const std::size_t N = mesh.unknowns();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const cplx z = r.eigenvalues[i];
    const SpectralClass c = r.classifications[i];
    const bool take = (c == SpectralClass::imaginary_pair && z.imag() > 0) || (c == SpectralClass::real_pair && z.real() > 0);
    if (!take) continue;
    const double mu = std::real(-z * z);
    const Vec u = detail::real_direction(r.eigenvectors->col(i).head(N));
    const double orth = std::abs(u.dot(Q)) / (u.norm() * Q.norm());
    if (orth > 1e-6) throw ProjectionFailure("eigenvector not orthogonal to Q: " + std::to_string(orth));
    const Vec y = detail::bordered_solve(Lm, Q, u);
    const double quotient = u.dot(Lp.apply(u)) / u.dot(y);
    rep.entries.push_back({mu, quotient, orth});
    rep.max_relative_error = std::max(rep.max_relative_error, std::abs(quotient - mu) / std::abs(mu));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Bifurcation at p_c and crossing points.

/// mu of the bifurcating branch: n = 1 through H (nearest-zero eigenvalue
/// other than the Q kernel), n >= 2 through radial calL (mu = -lam^2).
inline double bifurcating_mu(int n, double p, double r_max = 30.0, double dr = 0.01) {
  const RadialMesh mesh = default_mesh(n, r_max, dr);
  const GroundStateProfile prof = solve_ground_state(n, p, 0, mesh);
  if (n == 1) {
    const BandedOperator H = build_H(prof, mesh);
    const SpectrumResult s = symmetric_eigs(H, 3);
    std::vector<double> v;
    for (cplx z : s.eigenvalues) v.push_back(z.real());
    std::sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    return v[1];
  }
  EigenRequest req;
  req.shift = cplx(0.0, 0.01);
  req.count = 6;
  const cplx lam = detail::bifurcating_eigenvalue(shift_invert_arnoldi_retry(build_cal_L(prof, mesh), req));
  return std::real(-lam * lam);
}

struct BifurcationCheck {
  int n;
  double p_c, a_coeff, predicted_slope, measured_slope, relative_error;
  double mu_below, mu_above;  ///< at p_c -+ delta
  bool sign_change;           ///< imaginary pair below p_c, real pair above
};

inline BifurcationCheck bifurcation_check(int n, double delta = 0.01, double r_max = 30.0, double dr = 0.01) {
  const double pc = p_critical(n);
  const RadialMesh mesh = default_mesh(n, r_max, dr);
  const GroundStateProfile at = solve_ground_state(n, pc, 0, mesh);
  const oracle::BifurcationPrediction pred = oracle::bifurcation_prediction(n, at);
  BifurcationCheck c;
  c.n = n;
  c.p_c = pc;
  c.a_coeff = pred.a_coeff;
  c.predicted_slope = 8.0 * pred.a_coeff;
  c.mu_below = bifurcating_mu(n, pc - delta, r_max, dr);
  c.mu_above = bifurcating_mu(n, pc + delta, r_max, dr);
  c.measured_slope = (c.mu_above - c.mu_below) / (2.0 * delta);
  c.relative_error = std::abs(c.measured_slope - c.predicted_slope) / std::abs(c.predicted_slope);
  c.sign_change = c.mu_below > 0 && c.mu_above < 0;
  return c;
}

/// kappa(p) = Im lam of the bifurcating pair (p < p_c) minus the first
/// positive radial L+ eigenvalue.
inline double crossing_gap(int n, double p, double r_max = 30.0, double dr = 0.01) {
  const RadialMesh mesh = default_mesh(n, r_max, dr);
  const GroundStateProfile prof = solve_ground_state(n, p, 0, mesh);
  EigenRequest req;
  req.shift = cplx(0.0, 0.01);
  req.count = 6;
  const cplx lam = detail::bifurcating_eigenvalue(shift_invert_arnoldi_retry(build_cal_L(prof, mesh), req));
  const SpectrumResult lp = symmetric_eigs(build_L_plus_minus(prof, mesh, PlusMinus::plus), 2);
  return std::abs(lam.imag()) - lp.eigenvalues[1].real();
}

/// Bisection for the root of crossing_gap in [lo, hi].
inline double crossing_point(int n, double lo, double hi, double width = 1e-4, double r_max = 30.0,
                             double dr = 0.01) {
  double glo = crossing_gap(n, lo, r_max, dr), ghi = crossing_gap(n, hi, r_max, dr);
  if ((glo > 0) == (ghi > 0)) throw NoSignChange("crossing gap has equal signs on the bracket");
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    const double g = crossing_gap(n, mid, r_max, dr);
    if ((g > 0) == (glo > 0)) { lo = mid; glo = g; }
    else { hi = mid; ghi = g; }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Nullspace catalog and zero-cluster dimensions.

struct NullspaceEntry {
  std::string name;
  Vec vector;  ///< [u; w] on the mesh, empty when not representable (nonradial, n >= 2)
};

struct NullspaceCatalog {
  int n;
  double p;
  int expected_dim;
  std::vector<NullspaceEntry> entries;
};

/// Generators of the generalised kernel of calL. On radial meshes (n >= 2)
/// only the radial members carry vectors; x_j Q and d_j Q are listed by name.
/// rho (p = p_c) solves L+ rho = |x|^2 Q, bordered by Q' for n = 1.
inline NullspaceCatalog nullspace_catalog(int n, double p, const GroundStateProfile& prof) {
  if (prof.n != n || prof.m != 0) throw UnsupportedProfile("catalog needs the ground state of dimension n");
  const RadialMesh& mesh = prof.mesh;
  const std::size_t N = mesh.unknowns();
  const Vec Q = prof.values;
  const Vec r = mesh.coords();
  const Vec dQ = centered_derivative(mesh, Q, 1);
  const Vec Q1 = oracle::q1_generator(prof);
  auto stack = [N](const Vec& u, const Vec& w) {
    Vec v(2 * N);
    v.head(N) = u;
    v.tail(N) = w;
    return v;
  };
  const Vec zero = Vec::Zero(N);
  NullspaceCatalog c{n, p, oracle::expected_nullspace_dim(n, p), {}};
  c.entries.push_back({"iQ", stack(zero, Q)});
  for (int j = 0; j < n; ++j) {
    const std::string s = std::to_string(j + 1);
    c.entries.push_back({"i x" + s + " Q", n == 1 ? stack(zero, r.cwiseProduct(Q)) : Vec()});
    c.entries.push_back({"d" + s + " Q", n == 1 ? stack(dQ, zero) : Vec()});
  }
  c.entries.push_back({"Q1", stack(Q1, zero)});
  if (std::abs(p - p_critical(n)) < 1e-12) {
    const Vec r2Q = r.cwiseProduct(r).cwiseProduct(Q);
    c.entries.push_back({"i |x|^2 Q", stack(zero, r2Q)});
    Vec rho;
    if (n == 1) {
      rho = detail::bordered_solve(build_L_plus_minus(prof, mesh, PlusMinus::plus), dQ, r2Q);
    } else {
      rho = BandedLU<double>(build_L_plus_minus(prof, mesh, PlusMinus::plus, OperatorForm::raw)).solve(Vec(r2Q));
    }
    c.entries.push_back({"rho", stack(rho, zero)});
  }
  return c;
}

struct NullspaceCount {
  int n;
  double p;
  double tol_zero;
  int dimension;
  int expected;
  std::vector<cplx> cluster;
};

/// Number of calL eigenvalues with |lam| <= tol_zero. n = 1 uses the line
/// operator; n = 2 sums the X_0 and X_1 sectors of the cell-centred
/// discretisation and checks that X_2 contributes nothing.
inline NullspaceCount nullspace_dimension(int n, double p, double r_max = 30.0, double dr = 0.01) {
  NullspaceCount out{n, p, default_tol_zero(dr, p, p_critical(n)), 0, oracle::expected_nullspace_dim(n, p), {}};
  auto collect = [&](const SpectrumResult& r) {
    for (cplx z : r.eigenvalues)
      if (std::abs(z) <= out.tol_zero) {
        ++out.dimension;
        out.cluster.push_back(z);
      }
  };
  EigenRequest req;
  req.shift = cplx(0.0, 0.0);
  req.count = 12;
  if (n == 1) {
    const RadialMesh mesh = default_mesh(1, r_max, dr);
    const GroundStateProfile prof = solve_ground_state(1, p, 0, mesh);
    collect(shift_invert_arnoldi_retry(build_cal_L(prof, mesh), req));
  } else if (n == 2) {
    const RadialMesh mesh = sector_mesh(r_max, dr);
    const GroundStateProfile prof = solve_ground_state(2, p, 0, mesh);
    for (int k = 0; k <= 2; ++k) collect(shift_invert_arnoldi_retry(build_sector_LXk(prof, mesh, k), req));
  } else {
    throw DimensionUnsupported("zero-cluster count implemented for n = 1, 2");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sector algorithms: cross-validation and collisions.

struct CrossValidationSector {
  int k;
  std::size_t compared;        ///< nonzero eigenvalues matched below the band
  std::size_t compared_band;   ///< eigenvalues matched in the disc on the band
  double max_difference;
  std::size_t zero_cluster_X, zero_cluster_Z;
  std::vector<cplx> unpaired;
};

struct CrossValidationReport {
  int m;
  double p;
  std::vector<CrossValidationSector> sectors;
  double max_difference = 0;
  bool passed = true;
};

namespace detail {
/// Greedy nearest matching of two multisets; returns max distance and the
/// unmatched members of both.
inline double match_multisets(const std::vector<cplx>& a, const std::vector<cplx>& b, double tol,
                              std::vector<cplx>& unpaired) {
  std::vector<bool> used(b.size(), false);
  double worst = 0;
  for (cplx z : a) {
    std::size_t best = b.size();
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!used[j] && std::abs(b[j] - z) < d) { d = std::abs(b[j] - z); best = j; }
    if (best == b.size() || d > tol) {
      unpaired.push_back(z);
      continue;
    }
    used[best] = true;
    worst = std::max(worst, d);
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!used[j]) unpaired.push_back(b[j]);
  return worst;
}

struct DiscSpectra {
  std::vector<cplx> x, z;
  std::size_t zeros_x = 0, zeros_z = 0;
};

/// Eigenvalues of X_k and of Z_k, Z_{-k} strictly inside a common disc around
/// `shift`; members with |lam| <= tz are only counted.
inline DiscSpectra disc_spectra(const GroundStateProfile& prof, const RadialMesh& mesh, int k, cplx shift,
                                double cap, double tz) {
  EigenRequest req;
  req.shift = shift;
  req.count = k == 0 ? 12 : 24;
  const SpectrumResult X = shift_invert_arnoldi_retry(build_sector_LXk(prof, mesh, k), req);
  req.count = 12;
  const SpectrumResult Zp = shift_invert_arnoldi_retry(build_sector_Lmk(prof, mesh, k), req);
  SpectrumResult Zm;
  if (k != 0) Zm = shift_invert_arnoldi_retry(build_sector_Lmk(prof, mesh, -k), req);
  auto radius = [&](const SpectrumResult& r) {
    double rr = 0;
    for (cplx z : r.eigenvalues) rr = std::max(rr, std::abs(z - shift));
    return rr;
  };
  double R = std::min(radius(X), radius(Zp));
  if (k != 0) R = std::min(R, radius(Zm));
  R = std::min(R * (1.0 - 1e-6), cap);
  DiscSpectra d;
  auto take = [&](const SpectrumResult& r, std::vector<cplx>& dst, std::size_t& zeros) {
    for (cplx z : r.eigenvalues) {
      if (std::abs(z - shift) >= R) continue;
      if (std::abs(z) <= tz) ++zeros;
      else dst.push_back(z);
    }
  };
  take(X, d.x, d.zeros_x);
  take(Zp, d.z, d.zeros_z);
  if (k != 0) take(Zm, d.z, d.zeros_z);
  return d;
}
}  // namespace detail

/// Compares sigma(L_{X_k}) with sigma(L_{m,k}) U sigma(L_{m,-k}) in a disc
/// around 0 kept below the band, and in a second disc centred on the
/// discretised band at 1.2i. The zero cluster is compared by count only (its
/// members carry the eps^{1/l} Jordan error).
inline CrossValidationReport cross_validate_algorithms(int m, double p, int k_from, int k_to, double tol = 1e-6,
                                                       double r_max = 30.0, double dr = 0.01) {
  const RadialMesh mesh = sector_mesh(r_max, dr);
  const GroundStateProfile prof = solve_ground_state(2, p, m, mesh);
  const double tz = default_tol_zero(dr, p, p_critical(2));
  CrossValidationReport rep{m, p, {}, 0, true};
  for (int k = k_from; k <= k_to; ++k) {
    CrossValidationSector s{k, 0, 0, 0, 0, 0, {}};
    const detail::DiscSpectra low = detail::disc_spectra(prof, mesh, k, cplx(0.02, 0.0), 0.95, tz);
    const detail::DiscSpectra band = detail::disc_spectra(prof, mesh, k, cplx(1e-3, 1.2), 0.15, 0.0);
    s.compared = low.x.size();
    s.compared_band = band.x.size();
    s.zero_cluster_X = low.zeros_x;
    s.zero_cluster_Z = low.zeros_z;
    s.max_difference = std::max(detail::match_multisets(low.x, low.z, tol, s.unpaired),
                                detail::match_multisets(band.x, band.z, tol, s.unpaired));
    const bool ok = s.unpaired.empty() && s.zero_cluster_X == s.zero_cluster_Z;
    rep.passed = rep.passed && ok;
    rep.max_difference = std::max(rep.max_difference, s.max_difference);
    rep.sectors.push_back(std::move(s));
  }
  return rep;
}

enum class CollisionKind { origin_collision, off_axis_collision };

inline std::string to_string(CollisionKind k) {
  return k == CollisionKind::origin_collision ? "origin_collision" : "off_axis_collision";
}

struct CollisionEvent {
  int m;
  int k;
  double p_star;
  cplx lambda_star;
  CollisionKind kind;
  int bisection_steps = 0;
};

struct CollisionOptions {
  double r_max = 30.0;
  double dr = 0.01;
  double width = 5e-4;
  WindowOptions window;
};

/// Spectrum of X_k from L_{m,k}: sigma(L_{m,-k}) is the conjugate set because
/// the two matrices are entrywise conjugate.
inline std::vector<cplx> sector_window_spectrum(const GroundStateProfile& prof, const RadialMesh& mesh, int k,
                                                const WindowOptions& w, std::vector<cplx>* own = nullptr) {
  const BlockOperator<cplx> L = build_sector_Lmk(prof, mesh, k);
  std::vector<cplx> ev = window_search([&L](cplx s) { return make_block_map(L, s); }, w);
  if (own) *own = ev;
  if (k == 0) return ev;
  std::vector<cplx> all = ev;
  for (cplx z : ev) all.push_back(std::conj(z));
  return all;
}

/// Quadruple predicate: at least four complex_quadruple eigenvalues of X_k
/// inside the window.
inline bool has_quadruple(const std::vector<cplx>& ev, double tol_axis = 1e-6) {
  ClassifyOptions co;
  co.tol_zero = 0;
  co.tol_axis = tol_axis;
  int q = 0;
  for (cplx z : ev)
    if (classify(z, co) == SpectralClass::complex_quadruple) ++q;
  return q >= 4;
}

/// Origin predicate (k = 0): the pair beyond the two near-kernel eigenvalues
/// is real.
inline bool has_origin_real_pair(const GroundStateProfile& prof, const RadialMesh& mesh, cplx* pair = nullptr) {
  EigenRequest req;
  req.shift = cplx(0.0, 0.0);
  req.count = 6;
  const cplx z = detail::bifurcating_eigenvalue(shift_invert_arnoldi_retry(build_sector_Lmk(prof, mesh, 0), req));
  if (pair) *pair = z;
  return std::abs(z.real()) > std::abs(z.imag());
}

/// Bisection on p for the change of the collision predicate; deterministic.
inline CollisionEvent locate_collision(int m, int k, double p_lo, double p_hi, const CollisionOptions& o = {}) {
  if (!(p_lo < p_hi)) throw UsageError("collision bracket must satisfy p_lo < p_hi");
  const RadialMesh mesh = sector_mesh(o.r_max, o.dr);
  const CollisionKind kind = k == 0 ? CollisionKind::origin_collision : CollisionKind::off_axis_collision;
  struct Eval { bool flag; cplx lam; };
  auto eval = [&](double p) -> Eval {
    const GroundStateProfile prof = solve_ground_state(2, p, m, mesh);
    if (kind == CollisionKind::origin_collision) {
      cplx z;
      const bool f = has_origin_real_pair(prof, mesh, &z);
      return {f, z};
    }
    std::vector<cplx> own;
    const bool f = has_quadruple(sector_window_spectrum(prof, mesh, k, o.window, &own));
    cplx lam(0, 0);
    ClassifyOptions co;
    co.tol_zero = 0;
    double best = -1;
    // representative quadruple member of L_{m,k}: smallest |Re|
    for (cplx z : own)
      if (classify(z, co) == SpectralClass::complex_quadruple && (best < 0 || std::abs(z.real()) < best)) {
        best = std::abs(z.real());
        lam = z;
      }
    return {f, lam};
  };
  Eval lo = eval(p_lo), hi = eval(p_hi);
  if (lo.flag == hi.flag)
    throw NoSignChange("collision predicate equal at both ends of [" + std::to_string(p_lo) + ", " +
                       std::to_string(p_hi) + "]");
  CollisionEvent ev{m, k, 0, 0, kind, 0};
  while (p_hi - p_lo > o.width) {
    const double mid = 0.5 * (p_lo + p_hi);
    const Eval e = eval(mid);
    if (e.flag == lo.flag) { p_lo = mid; lo = e; }
    else { p_hi = mid; hi = e; }
    ++ev.bisection_steps;
  }
  ev.p_star = 0.5 * (p_lo + p_hi);
  if (kind == CollisionKind::origin_collision) {
    ev.lambda_star = 0;
  } else {
    const Eval& q = lo.flag ? lo : hi;
    ev.lambda_star = cplx(0.0, q.lam.imag());
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Resonance study (n = 1, p near 3).

struct ResonanceRow {
  double p;
  double mu;
  double deviation;  ///< w-functional of u_p - u_3
};

struct ResonanceTable {
  double delta;  ///< w-functional of u_3
  std::vector<ResonanceRow> rows;
};

/// u_p = S* f with f the H eigenvector of the first eigenvalue above the Q
/// kernel; u_p solves L- L+ u = mu u. Normalised real, u_p(0) < 0,
/// ||u_p||_w = delta.
inline Vec resonance_mode(double p, const RadialMesh& mesh, double delta, double* mu = nullptr) {
  const GroundStateProfile prof = solve_ground_state(1, p, 0, mesh);
  const BandedOperator H = build_H(prof, mesh);
  const SpectrumResult s = symmetric_eigs(H, 2, Which::smallest_real, 1e-10, true);
  if (mu) *mu = s.eigenvalues[1].real();
  const Vec f = s.eigenvectors->col(1).real();
  Vec u = build_factor_Sj(prof, mesh, 1.0).adjoint().apply(f);
  const std::size_t mid = mesh.unknowns() / 2;  // x = 0
  if (u[mid] > 0) u = -u;
  return u * (delta / oracle::resonance_norm(u, mesh));
}

inline ResonanceTable resonance_study(const std::vector<double>& p_values, double r_max = 130.0, double dr = 0.01) {
  const RadialMesh mesh = default_mesh(1, r_max, dr);
  const Vec u3 = oracle::resonance_profile(mesh);
  ResonanceTable t;
  t.delta = oracle::resonance_norm(u3, mesh);
  t.rows.resize(p_values.size());
  parallel_for(p_values.size(), [&](std::size_t i) {
    const double p = p_values[i];
    if (p == 3.0) {
      t.rows[i] = {p, 1.0, 0.0};
      return;
    }
    double mu = 0;
    const Vec u = resonance_mode(p, mesh, t.delta, &mu);
    t.rows[i] = {p, mu, oracle::resonance_norm(Vec(u - u3), mesh)};
  });
  return t;
}

}  // namespace nls_spectra
