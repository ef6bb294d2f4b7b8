#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ground_state.hpp"

namespace nls_spectra::oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// k_j = (p+1)/2 - j(p-1)/2, for any real j.
inline double k_of(double p, double j) { return (p + 1.0) / 2.0 - j * (p - 1.0) / 2.0; }
/// lambda_j = 1 - k_j^2.
inline double lambda_of(double p, double j) {
  const double k = k_of(p, j);
  return 1.0 - k * k;
}
/// p_j = (j+1)/(j-1) for j > 1, infinity otherwise.
inline double p_of(double j) { return j > 1.0 ? (j + 1.0) / (j - 1.0) : kInf; }

enum class Parity { even, odd };
enum class Carrier { Lplus, both };

struct LadderEntry {
  int m;
  double k;
  double lambda;
  Parity parity;
  Carrier belongs_to;
};

struct Ladder1D {
  double p;
  int M;
  std::vector<LadderEntry> entries;
};

/// Eigenvalue ladder of the 1D operators: L+ carries lambda_0..lambda_M,
/// L- carries lambda_1..lambda_M, with p_{M+1} <= p < p_M.
inline Ladder1D ladder(double p) {
  if (!(p > 1.0)) throw InvalidExponent("ladder needs p > 1");
  Ladder1D L{p, 0, {}};
  while (p < p_of(L.M + 1)) ++L.M;
  for (int m = 0; m <= L.M; ++m)
    L.entries.push_back({m, k_of(p, m), lambda_of(p, m), m % 2 == 0 ? Parity::even : Parity::odd,
                         m == 0 ? Carrier::Lplus : Carrier::both});
  return L;
}

inline std::vector<double> ladder_values(double p, bool lplus) {
  std::vector<double> v;
  for (const auto& e : ladder(p).entries)
    if (lplus || e.belongs_to == Carrier::both) v.push_back(e.lambda);
  return v;
}

/// log cosh without overflow.
inline double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

inline double c_p(double p) { return std::pow((p + 1.0) / 2.0, 1.0 / (p - 1.0)); }
inline double beta_p(double p) { return 2.0 / (p - 1.0); }

/// log Q(x) for Q(x) = c_p cosh^{-beta}(x/beta).
inline double log_closed_form_Q(double p, double x) {
  const double b = beta_p(p);
  return std::log(c_p(p)) - b * log_cosh(x / b);
}
inline double closed_form_Q(double p, double x) { return std::exp(log_closed_form_Q(p, x)); }
/// Q'(x) = -Q tanh(x/beta).
inline double closed_form_dQ(double p, double x) {
  return -closed_form_Q(p, x) * std::tanh(x / beta_p(p));
}

/// Point spectrum of the hierarchy operator L_j (ascending).
inline std::vector<double> hierarchy_spectrum(double p, double j) {
  std::vector<double> s;
  for (double k = j;; k += 1.0) {
    if (!(p < p_of(k))) break;
    s.push_back(lambda_of(p, k));
    if (k - j > 1e6) break;
  }
  for (double k = j - 1.0; k > 1.0; k -= 1.0)
    if (p > p_of(k)) s.push_back(lambda_of(p, k));
  std::sort(s.begin(), s.end());
  return s;
}

/// lambda'_j: the sharp lower bound L_j >= lambda'_j.
inline double lambda_prime(double p, double j) {
  if (p <= p_of(j)) return lambda_of(p, j);
  if (p < p_of(j - 1.0)) return 1.0;
  return lambda_of(p, j - 1.0);
}

struct InterlacingBounds {
  int j;              ///< bounds apply to mu_{j+1}
  int k;              ///< p in [p_{k+2}, p_{k+1})
  double lower;       ///< strict
  double upper;       ///< strict unless upper_inclusive
  bool upper_inclusive;
  std::optional<double> sharper_lower;  ///< non-strict lower bound when available
  double conjectured_lower;             ///< diagnostic only
};

/// The k >= 1 with p in [p_{k+2}, p_{k+1}), or nullopt.
inline std::optional<int> interlacing_regime(double p) {
  for (int k = 1; k < 100000; ++k) {
    if (p >= p_of(k + 2) && p < p_of(k + 1)) return k;
    if (p >= p_of(k + 1)) return std::nullopt;
  }
  return std::nullopt;
}

/// Non-strict lower bounds for mu_1 (p >= 5), mu_2 (1<p<5), mu_3.
inline std::optional<double> sharper_mu_lower(double p, int index) {
  auto L = [p](int j) { return lambda_of(p, j); };
  if (index == 1 && p >= 5.0) return -(1.0 / 16.0) * std::pow(p - 1.0, 3) * (p - 5.0);
  if (index == 2) {
    if (p > 1.0 && p <= 2.0) return L(2) * L(3);
    if (p > 2.0 && p < 5.0) return L(2);
  }
  if (index == 3) {
    if (p > 1.0 && p <= 5.0 / 3.0) return L(3) * L(4);
    if (p > 5.0 / 3.0 && p <= 2.0) return L(3);
    if (p > 2.0) return 1.0;
  }
  return std::nullopt;
}

inline InterlacingBounds interlacing_bounds(double p, int j) {
  auto k = interlacing_regime(p);
  if (!k) throw OutOfRange("p = " + std::to_string(p) + " is not in [p_{k+2}, p_{k+1}) for k >= 1");
  if (j < 1 || j > *k)
    throw OutOfRange("j = " + std::to_string(j) + " outside 1.." + std::to_string(*k));
  InterlacingBounds b;
  b.j = j;
  b.k = *k;
  const double l1 = lambda_of(p, j + 1);
  b.lower = l1 * l1;
  if (j < *k) {
    const double l2 = lambda_of(p, j + 2);
    b.upper = l2 * l2;
    b.upper_inclusive = false;
  } else {
    b.upper = 1.0;
    b.upper_inclusive = true;
  }
  b.sharper_lower = sharper_mu_lower(p, j + 1);
  b.conjectured_lower = (p < p_of(j + 2)) ? lambda_of(p, j + 1) * lambda_of(p, j + 2) : lambda_of(p, j + 1);
  return b;
}

/// int sech^s(y) dy = B(s/2, 1/2).
inline double sech_power_integral(double s) {
  return std::exp(std::lgamma(s / 2.0) + std::lgamma(0.5) - std::lgamma(s / 2.0 + 0.5));
}

/// int Q^s dx for the closed-form 1D ground state.
inline double closed_form_Q_power_integral(double p, double s) {
  const double b = beta_p(p);
  return std::pow(c_p(p), s) * b * sech_power_integral(b * s);
}

/// Test-function quotient (f, Hf)/(f, f) for f = S Q^k, 0 < k.
inline double mu2_test_quotient(double p, double k) {
  const double a = (k - 1.0) * (2.0 * k + p + 1.0) / (p + 1.0);
  const double b = 1.0 - k * k;
  const double sigma = (k + 2.0 * p - 1.0) * (2.0 * k + p - 3.0) / (p + 1.0);
  const double d = 1.0 - (k + p - 1.0) * (k + p - 1.0);
  const double c = (k + p) * (2.0 * k - p - 1.0) / (p + 1.0);
  double J[4];
  for (int m = 0; m < 4; ++m) J[m] = closed_form_Q_power_integral(p, 2.0 * k + m * (p - 1.0));
  const double num = a * a * sigma * J[3] + a * (a * d + b * c + b * sigma) * J[2] +
                     b * (a * d + a * b + b * c) * J[1] + b * b * b * J[0];
  return num / (a * J[1] + b * J[0]);
}

/// C_p: minimum of the test quotient over k in (0, 1]. Near p = 3 the
/// infimum sits at k -> 0, so the search runs on a log grid down to 1e-8
/// followed by golden-section refinement in log k. At k = 1 the quotient is
/// 0/0 (a = b = 0); that endpoint is extrapolated from two interior samples.
inline double mu2_upper_bound(double p) {
  if (!(p > 1.0 && p < 5.0)) throw OutOfRange("C_p is defined for 1 < p < 5");
  const int n = 800;
  const double eps = 1e-5, lo_k = std::log(1e-8), hi_k = std::log(1.0 - eps);
  auto q = [p](double t) { return mu2_test_quotient(p, std::exp(t)); };
  double best = 2.0 * mu2_test_quotient(p, 1.0 - eps) - mu2_test_quotient(p, 1.0 - 2.0 * eps);
  double best_t = hi_k;
  const double step = (hi_k - lo_k) / n;
  for (int i = 0; i <= n; ++i) {
    const double t = lo_k + step * i;
    const double v = q(t);
    if (v < best) { best = v; best_t = t; }
  }
  double lo = std::max(lo_k, best_t - step), hi = std::min(hi_k, best_t + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (q(x1) < q(x2)) hi = x2; else lo = x1;
  }
  return std::min(best, q(0.5 * (lo + hi)));
}

/// Closed-form 1D eigenfunctions of L+ (which = Lplus) and L- (which = both)
/// built from the two-term coefficient recurrences; evaluated at x, not
/// normalised.
///   L+: phi_{2l} = sum c_j Q^{k_{2j}},  phi_{2l-1} = sum c_j (Q^{k_{2j-1}})_x
///   L-: psi_{2l-1} = sum d_j Q^{k_{2j-1}}, psi_{2l} = sum d_j (Q^{k_{2j}})_x
inline double ladder_eigenfunction(double p, int m, Carrier which, double x) {
  const bool plus = which == Carrier::Lplus;
  if (!plus && m < 1) throw OutOfRange("L- eigenfunctions start at m = 1");
  // basis powers k_t for t = start, start+2, ..., m
  const int start = (m % 2 == 0) ? (plus ? 0 : 2) : 1;
  const bool derivative = plus ? (m % 2 == 1) : (m % 2 == 0);
  // coefficient A(k) with L Q^k = A(k) Q^{k+p-1} + (1 - k^2) Q^k, or the
  // derivative version L (Q^k)_x = A'(k) (Q^{k+p-1})_x + (1 - k^2)(Q^k)_x
  auto coupling = [&](double k) {
    if (plus && !derivative) return (k + p) * (2.0 * k - p - 1.0) / (p + 1.0);
    if (plus && derivative) return (k - 1.0) * (2.0 * k + 3.0 * p - 1.0) / (p + 1.0) * k / (k + p - 1.0);
    if (!plus && !derivative) return (k - 1.0) * (2.0 * k + p + 1.0) / (p + 1.0);
    return (k + p) * (2.0 * k + p - 3.0) / (p + 1.0) * k / (k + p - 1.0);
  };
  const double lam = lambda_of(p, m);
  const double logQ = log_closed_form_Q(p, x);
  const double th = std::tanh(x / beta_p(p));
  double c = 1.0, sum = 0.0;
  for (int t = start; t <= m; t += 2) {
    const double k = k_of(p, t);
    const double basis = std::exp(k * logQ) * (derivative ? -k * th : 1.0);
    sum += c * basis;
    if (t + 2 <= m) c *= (lam - lambda_of(p, t)) / coupling(k_of(p, t + 2));
  }
  return sum;
}

inline double lplus_expected_count_below(double p, double cutoff) {
  double c = 0;
  for (double v : ladder_values(p, true)) c += v < cutoff;
  return c;
}

/// Resonance profile u_3 = 1 - Q^2 (p = 3) sampled on a 1D mesh.
inline Vec resonance_profile(const RadialMesh& mesh) {
  if (mesh.dim != 1) throw DimensionUnsupported("resonance profile is 1D");
  Vec u(mesh.unknowns());
  for (std::size_t i = 0; i < mesh.unknowns(); ++i) {
    const double q = closed_form_Q(3.0, mesh.coord(i));
    u[i] = 1.0 - q * q;
  }
  return u;
}

/// w-functional: sqrt( int (f(x)/sqrt(1+x^2))^2 dx ).
inline double resonance_norm(const Vec& f, const RadialMesh& mesh) {
  if (mesh.dim != 1) throw DimensionUnsupported("w-functional is 1D");
  double s = 0;
  for (std::size_t i = 0; i < mesh.unknowns(); ++i) {
    const double x = mesh.coord(i);
    s += f[i] * f[i] / (1.0 + x * x);
  }
  return std::sqrt(s * mesh.dr);
}

struct BifurcationPrediction {
  int n;
  double p_c;
  double a_coeff;
  double mu_linear(double p) const { return 8.0 * a_coeff * (p - p_c); }
  /// +-sqrt(-mu): real pair for p > p_c, imaginary pair for p < p_c.
  std::complex<double> lambda_pair(double p) const {
    return std::sqrt(std::complex<double>(-mu_linear(p), 0.0));
  }
};

/// Q_1 = (2/(p-1) + r d/dr) Q on the mesh.
inline Vec q1_generator(const GroundStateProfile& prof) {
  const Vec r = prof.mesh.coords();
  const Vec dQ = centered_derivative(prof.mesh, prof.values, 1);
  return (2.0 / (prof.p - 1.0)) * prof.values + r.cwiseProduct(dQ);
}

/// a = n (Q_1, Q^p) / (4 (Q_1, |x|^2 Q)) from quadrature of a profile at p_c.
inline BifurcationPrediction bifurcation_prediction(int n, const GroundStateProfile& prof) {
  if (prof.n != n || prof.m != 0) throw UnsupportedProfile("needs the radial ground state for n");
  const double pc = p_critical(n);
  if (std::abs(prof.p - pc) > 1e-12) throw OutOfRange("profile is not at p_c");
  const Vec w = prof.mesh.weights();
  const Vec r = prof.mesh.coords();
  const Vec Q1 = q1_generator(prof);
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double Q = prof.values[i];
    num += w[i] * Q1[i] * std::pow(Q, prof.p);
    den += w[i] * Q1[i] * r[i] * r[i] * Q;
  }
  if (std::abs(den) < 1e-12) throw QuadratureFailure("(Q_1, |x|^2 Q) vanishes");
  return {n, pc, n * num / (4.0 * den)};
}

inline int expected_nullspace_dim(int n, double p) {
  return 2 * n + 2 + (std::abs(p - p_critical(n)) < 1e-12 ? 2 : 0);
}

}  // namespace nls_spectra::oracle
