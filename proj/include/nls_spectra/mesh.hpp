#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "banded.hpp"

namespace nls_spectra {

enum class BoundaryRule { dirichlet_outer };

/// How the row at (or next to) r = 0 is closed.
///  symmetry_ghost   node at r = 0, ghost value q_{-1} = q_1 (even functions)
///  dirichlet_origin nodes r_i = i dr, i >= 1, value 0 at r = 0
///  cell_centered    nodes r_i = (i + 1/2) dr; in two dimensions the ghost
///                   coefficient of the first row vanishes identically
enum class OriginRule { symmetry_ghost, dirichlet_origin, cell_centered };

inline std::string to_string(OriginRule r) {
  switch (r) {
    case OriginRule::symmetry_ghost: return "symmetry_ghost";
    case OriginRule::dirichlet_origin: return "dirichlet_origin";
    case OriginRule::cell_centered: return "cell_centered";
  }
  return "?";
}

/// Uniform radial grid on [0, r_max] (dim >= 2) or the full line
/// (-r_max, r_max) when dim == 1. Dirichlet data at the outer end(s).
struct RadialMesh {
  double r_max = 30.0;
  double dr = 0.01;
  std::size_t n_points = 3000;
  int dim = 1;
  std::optional<int> angular_points;
  BoundaryRule boundary = BoundaryRule::dirichlet_outer;
  OriginRule origin_rule = OriginRule::symmetry_ghost;

  static RadialMesh make(int dim, double r_max, double dr,
                         OriginRule rule = OriginRule::symmetry_ghost,
                         std::optional<int> angular = std::nullopt) {
    RadialMesh m;
    m.dim = dim;
    m.r_max = r_max;
    m.dr = dr;
    m.origin_rule = rule;
    m.angular_points = angular;
    if (!(dr > 0) || !(r_max > 0)) throw InvalidMesh("dr and r_max must be positive");
    m.n_points = static_cast<std::size_t>(std::llround(r_max / dr));
    m.validate();
    return m;
  }

  void validate() const {
    if (!(dr > 0)) throw InvalidMesh("dr must be positive");
    if (n_points < 8) throw InvalidMesh("n_points must be at least 8");
    if (dim < 1) throw InvalidMesh("dimension must be >= 1");
    if (std::abs(r_max - static_cast<double>(n_points) * dr) > 1e-9 * r_max)
      throw InvalidMesh("r_max is not an integer multiple of dr");
    if (origin_rule == OriginRule::cell_centered && dim != 2)
      throw InvalidMesh("cell_centered origin rule is only defined for dim = 2");
    if (angular_points && (*angular_points < 4 || *angular_points % 2 != 0))
      throw InvalidMesh("angular_points must be even and >= 4");
  }

  /// Number of radial (or line) unknowns.
  std::size_t unknowns() const {
    if (dim == 1) return 2 * n_points - 1;
    return origin_rule == OriginRule::dirichlet_origin ? n_points - 1 : n_points;
  }

  double coord(std::size_t i) const {
    if (dim == 1) return -r_max + static_cast<double>(i + 1) * dr;
    switch (origin_rule) {
      case OriginRule::symmetry_ghost: return static_cast<double>(i) * dr;
      case OriginRule::dirichlet_origin: return static_cast<double>(i + 1) * dr;
      case OriginRule::cell_centered: return (static_cast<double>(i) + 0.5) * dr;
    }
    return 0;
  }

  Vec coords() const {
    Vec r(unknowns());
    for (std::size_t i = 0; i < unknowns(); ++i) r[i] = coord(i);
    return r;
  }

  /// Area of the unit sphere S^{dim-1} (2 for the line, 2 pi, 4 pi, ...).
  double surface_measure() const {
    return 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
  }

  /// Trapezoid (midpoint for cell_centered) weights including r^{dim-1} and
  /// the sphere area, so that sum w_i f(r_i) approximates the integral over R^dim.
  Vec weights() const {
    Vec w(unknowns());
    if (dim == 1) {
      w.setConstant(dr);
      return w;
    }
    const double s = surface_measure();
    for (std::size_t i = 0; i < unknowns(); ++i) w[i] = s * dr * std::pow(coord(i), dim - 1);
    if (origin_rule == OriginRule::symmetry_ghost) w[0] *= 0.5;
    return w;
  }

  /// Parameter-equality used for MeshMismatch checks.
  bool same_grid(const RadialMesh& o) const {
    return dim == o.dim && n_points == o.n_points && origin_rule == o.origin_rule &&
           std::abs(dr - o.dr) <= 1e-14 * dr;
  }

  std::string summary() const {
    std::string s = "dim=" + std::to_string(dim) + " r_max=" + std::to_string(r_max) +
                    " dr=" + std::to_string(dr) + " origin=" + to_string(origin_rule);
    if (angular_points) s += " T=" + std::to_string(*angular_points);
    return s;
  }
};

namespace detail {
inline void require_angular_rule(const RadialMesh& mesh, int m) {
  if (m != 0 && mesh.dim == 1) throw InvalidMesh("angular index is meaningless on the line");
  if (m != 0 && mesh.origin_rule == OriginRule::symmetry_ghost)
    throw OriginRuleMismatch("angular index m >= 1 needs dirichlet_origin or cell_centered");
}
}  // namespace detail

/// Tridiagonal discretisation of -d^2/dr^2 - ((n-1)/r) d/dr + m^2/r^2 with
/// Dirichlet data at the outer boundary. `m_squared` may be any value (the
/// sector operators use (m +- k)^2); it only requires r > 0 on every node.
inline BandedOperator radial_laplacian_msq(const RadialMesh& mesh, double m_squared) {
  mesh.validate();
  const std::size_t n = mesh.unknowns();
  const double h = mesh.dr, h2 = h * h;
  BandedOperator A(n, n, 1, 1);
  if (mesh.dim == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      A.ref(i, i) = 2.0 / h2;
      if (i > 0) A.ref(i, i - 1) = -1.0 / h2;
      if (i + 1 < n) A.ref(i, i + 1) = -1.0 / h2;
    }
    return A;
  }
  const double nm1 = mesh.dim - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = mesh.coord(i);
    if (r == 0.0) {
      // ghost row: -(n) * (q_1 - 2 q_0 + q_{-1}) / h^2 with q_{-1} = q_1
      A.ref(i, i) = 2.0 * mesh.dim / h2;
      if (i + 1 < n) A.ref(i, i + 1) = -2.0 * mesh.dim / h2;
      continue;
    }
    A.ref(i, i) = 2.0 / h2 + m_squared / (r * r);
    const double lo = -1.0 / h2 + nm1 / (2.0 * r * h);
    if (i > 0) A.ref(i, i - 1) = lo;
    if (i + 1 < n) A.ref(i, i + 1) = -1.0 / h2 - nm1 / (2.0 * r * h);
  }
  return A;
}

inline BandedOperator build_radial_laplacian(const RadialMesh& mesh, int m) {
  if (m < 0) throw OutOfRange("angular index must be >= 0");
  detail::require_angular_rule(mesh, m);
  return radial_laplacian_msq(mesh, static_cast<double>(m) * m);
}

/// Discrete polar -Laplacian on the N x T grid, unknown (r_i, theta_t) at
/// index i*T + t, periodic in theta. Needs a cell_centered mesh.
inline BandedOperator build_full_2d_laplacian(const RadialMesh& mesh) {
  mesh.validate();
  if (mesh.dim != 2 || !mesh.angular_points) throw InvalidMesh("full 2D mesh needs dim=2 and T");
  if (mesh.origin_rule != OriginRule::cell_centered)
    throw OriginRuleMismatch("full 2D Laplacian is built on the cell_centered grid");
  const std::size_t N = mesh.unknowns();
  const std::size_t T = static_cast<std::size_t>(*mesh.angular_points);
  const double dth = 2.0 * std::numbers::pi / static_cast<double>(T);
  const BandedOperator radial = radial_laplacian_msq(mesh, 0.0);
  const int bw = static_cast<int>(T);
  BandedOperator A(N * T, N * T, bw, bw);
  for (std::size_t i = 0; i < N; ++i) {
    const double r = mesh.coord(i);
    const double ang = 1.0 / (r * r * dth * dth);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t row = i * T + t;
      A.ref(row, row) = radial(i, i) + 2.0 * ang;
      if (i > 0) A.ref(row, row - T) = radial(i, i - 1);
      if (i + 1 < N) A.ref(row, row + T) = radial(i, i + 1);
      A.ref(row, i * T + (t + 1) % T) += -ang;
      A.ref(row, i * T + (t + T - 1) % T) += -ang;
    }
  }
  return A;
}

/// Centred first derivative of grid samples. `parity` is the symmetry of the
/// function under r -> -r (used to fill the value left of the first node).
inline Vec centered_derivative(const RadialMesh& mesh, const Vec& u, int parity = 1) {
  const std::size_t n = mesh.unknowns();
  Vec d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double left, right = (i + 1 < n) ? u[i + 1] : 0.0;
    if (i > 0) {
      left = u[i - 1];
    } else if (mesh.dim == 1 || mesh.origin_rule == OriginRule::dirichlet_origin) {
      left = 0.0;
    } else if (mesh.origin_rule == OriginRule::symmetry_ghost) {
      left = parity * u[1];
    } else {
      left = parity * u[0];
    }
    d[i] = (right - left) / (2.0 * mesh.dr);
  }
  return d;
}

}  // namespace nls_spectra
