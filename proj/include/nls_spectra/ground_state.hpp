#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "mesh.hpp"

namespace nls_spectra {

struct SolverOptions {
  double alpha_tol = 1e-12;     ///< |alpha_{j+1} - alpha_j| <= alpha_tol * alpha_{j+1}
  double residual_tol = 1e-10;  ///< scaled max-norm residual, see residual_inf
  int max_iters = 10000;
};

struct GroundStateProfile {
  RadialMesh mesh;
  Vec values;
  double p = 3;
  int n = 1;
  int m = 0;
  double alpha = 0;
  /// ||(A + I)Q - Q^p||_inf / max(1, ||Q||_inf)
  double residual_inf = 0;
  int iterations = 0;
};

/// Largest admissible exponent: 1 + 4/(n-2) for n >= 3, infinite otherwise.
inline double p_max(int n) {
  return n >= 3 ? 1.0 + 4.0 / (n - 2) : std::numeric_limits<double>::infinity();
}

inline double p_critical(int n) { return 1.0 + 4.0 / n; }

namespace detail {
inline Vec pow_nonneg(const Vec& q, double p) {
  Vec r(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) r[i] = std::pow(std::max(q[i], 0.0), p);
  return r;
}

inline double scaled_residual(const BandedOperator& AI, const Vec& Q, double p) {
  Vec res = AI.apply(Q) - pow_nonneg(Q, p);
  return res.cwiseAbs().maxCoeff() / std::max(1.0, Q.cwiseAbs().maxCoeff());
}
}  // namespace detail

/// Normalise-and-iterate scheme: (A + I) q~ = q^p, q = q~/||q~||_2, output
/// alpha^{1/(p-1)} q. The matrix A + I is factored once.
inline GroundStateProfile solve_ground_state(int n, double p, int m, const RadialMesh& mesh,
                                             const SolverOptions& opts = {}) {
  if (!(p > 1.0) || !(p < p_max(n)))
    throw InvalidExponent("p = " + std::to_string(p) + " outside (1, p_max(" + std::to_string(n) + "))");
  if (m < 0) throw UnsupportedProfile("angular index must be >= 0");
  if (m >= 1 && n != 2) throw UnsupportedProfile("m >= 1 profiles exist only for n = 2");
  if (mesh.dim != n) throw MeshMismatch("mesh dimension differs from n");

  const BandedOperator AI = build_radial_laplacian(mesh, m).shifted(1.0);
  const BandedLU<double> lu(AI);
  const Vec r = mesh.coords();

  Vec q(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) q[i] = std::pow(std::abs(r[i]), m) * std::exp(-r[i] * r[i]);
  q /= q.norm();

  GroundStateProfile out;
  out.mesh = mesh;
  out.p = p;
  out.n = n;
  out.m = m;
  double alpha_prev = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Vec qt = lu.solve(detail::pow_nonneg(q, p));
    const double alpha = 1.0 / qt.norm();
    q = alpha * qt;
    if (std::abs(alpha - alpha_prev) <= opts.alpha_tol * alpha) {
      Vec Q = std::pow(alpha, 1.0 / (p - 1.0)) * q;
      const double res = detail::scaled_residual(AI, Q, p);
      if (res <= opts.residual_tol) {
        // Near p_max the iteration can lock onto a one-node spike, a discrete
        // fixed point with no continuum counterpart; refine dr instead.
        const double half = 0.5 * Q.maxCoeff();
        if ((Q.array() >= half).count() < 4)
          throw NotConverged("ground state (n=" + std::to_string(n) + ", p=" + std::to_string(p) +
                             ") collapsed to a grid-scale spike; dr = " + std::to_string(mesh.dr) +
                             " does not resolve the profile");
        out.values = std::move(Q);
        out.alpha = alpha;
        out.residual_inf = res;
        out.iterations = it;
        return out;
      }
    }
    alpha_prev = alpha;
  }
  throw NotConverged("ground state (n=" + std::to_string(n) + ", p=" + std::to_string(p) +
                     ", m=" + std::to_string(m) + ") after " + std::to_string(opts.max_iters) +
                     " iterations");
}

/// Quadratures shared by the Pohozaev and Gagliardo-Nirenberg diagnostics.
struct ProfileIntegrals {
  double mass = 0;   ///< int u^2
  double grad = 0;   ///< int |grad u|^2 (radial part plus m^2 u^2 / r^2)
  double power = 0;  ///< int |u|^{p+1}
};

inline ProfileIntegrals profile_integrals(const RadialMesh& mesh, const Vec& u, double p, int m = 0) {
  const Vec w = mesh.weights();
  const Vec r = mesh.coords();
  const Vec du = centered_derivative(mesh, u, (m % 2 == 0) ? 1 : -1);
  ProfileIntegrals I;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    I.mass += w[i] * u[i] * u[i];
    double g = du[i] * du[i];
    if (m != 0 && r[i] > 0) g += m * m * u[i] * u[i] / (r[i] * r[i]);
    I.grad += w[i] * g;
    I.power += w[i] * std::pow(std::abs(u[i]), p + 1.0);
  }
  return I;
}

/// Pohozaev ratios (both ~ 1 for a solution):
///   [1/2 int Q^2] / [(b/(p+1)) int Q^{p+1}],  [1/2 int |grad Q|^2] / [(a/(p+1)) int Q^{p+1}]
/// with a = n(p-1)/4, b = (n+2-(n-2)p)/4.
inline std::pair<double, double> pohozaev_check(const GroundStateProfile& prof) {
  const double p = prof.p, n = prof.n;
  const double a = n * (p - 1.0) / 4.0;
  const double b = (n + 2.0 - (n - 2.0) * p) / 4.0;
  const ProfileIntegrals I = profile_integrals(prof.mesh, prof.values, p, prof.m);
  return {0.5 * I.mass / (b / (p + 1.0) * I.power), 0.5 * I.grad / (a / (p + 1.0) * I.power)};
}

/// J[u] = (int |grad u|^2)^a (int u^2)^b / int |u|^{p+1}.
inline double gn_quotient(const RadialMesh& mesh, const Vec& u, int n, double p, int m = 0) {
  const double a = n * (p - 1.0) / 4.0;
  const double b = (n + 2.0 - (n - 2.0) * p) / 4.0;
  const ProfileIntegrals I = profile_integrals(mesh, u, p, m);
  return std::pow(I.grad, a) * std::pow(I.mass, b) / I.power;
}

inline double gn_quotient(const GroundStateProfile& prof) {
  return gn_quotient(prof.mesh, prof.values, prof.n, prof.p, prof.m);
}

}  // namespace nls_spectra
