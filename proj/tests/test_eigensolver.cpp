#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "nls_spectra/eigensolver.hpp"

using namespace nls_spectra;

namespace {
BandedOperator random_symmetric(std::size_t n, int bw, unsigned seed) {
  std::mt19937 g(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  BandedOperator A(n, n, bw, bw);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < std::min(n, i + bw + 1); ++j) A.ref(i, j) = A.ref(j, i) = u(g);
  return A;
}

BandedOperator laplacian_1d(std::size_t n) {
  BandedOperator A(n, n, 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    A.ref(i, i) = 2;
    if (i + 1 < n) A.ref(i, i + 1) = A.ref(i + 1, i) = -1;
  }
  return A;
}

// nonsymmetric test matrix with spectrum d_i +- i b_i: blocks
// [[D, B], [-B, D]], D upper bidiagonal, B diagonal
BlockOperator<double> rotation_chain(std::size_t n) {
  BandedOperator D(n, n, 1, 1), Bd(n, n, 0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    D.ref(i, i) = 0.02 * static_cast<double>(i) - 0.25;
    if (i + 1 < n) D.ref(i, i + 1) = 0.05;
    Bd.ref(i, i) = 0.3 + 0.01 * static_cast<double>(i);
  }
  BlockOperator<double> L(2, n);
  L.set(0, 0, D);
  L.set(0, 1, Bd);
  L.set(1, 0, Bd * -1.0);
  L.set(1, 1, D);
  return L;
}
}  // namespace

TEST(Eigensolver, CountBelowIsSturmCount) {
  const BandedOperator A = random_symmetric(50, 2, 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.to_dense());
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < 50; ++i) c += es.eigenvalues()[i] < x;
    EXPECT_EQ(count_below(A, x), c) << "x=" << x;
  }
}

TEST(Eigensolver, SymmetricMatchesDense) {
  const BandedOperator A = random_symmetric(80, 3, 5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.to_dense());
  const SpectrumResult r = symmetric_eigs(A, 6, Which::smallest_real, 1e-10, true);
  ASSERT_EQ(r.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(r.eigenvalues[i].real(), es.eigenvalues()[i], 1e-10);
    EXPECT_LE(r.residuals[i], 1e-10 * std::max(1.0, A.norm_inf()));
  }
  ASSERT_TRUE(r.eigenvectors);
  const Eigen::MatrixXd V = r.eigenvectors->real();
  EXPECT_LT((V.transpose() * V - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-8);
}

TEST(Eigensolver, EigsBelowCutoff) {
  // 2 - 2 cos(k pi / (n+1))
  const std::size_t n = 100;
  const SpectrumResult r = symmetric_eigs_below(laplacian_1d(n), 0.01);
  std::size_t expected = 0;
  for (std::size_t k = 1; k <= n; ++k) expected += 2 - 2 * std::cos(k * M_PI / (n + 1)) < 0.01;
  ASSERT_EQ(r.size(), expected);
  EXPECT_NEAR(r.eigenvalues[0].real(), 2 - 2 * std::cos(M_PI / (n + 1)), 1e-12);
}

TEST(Eigensolver, RejectsNonsymmetric) {
  BandedOperator A = laplacian_1d(20);
  A.ref(0, 1) = -3;
  EXPECT_THROW(symmetric_eigs(A, 2), ConvergenceFailure);
}

TEST(Eigensolver, ShiftInvertBlockMatchesDense) {
  const auto L = rotation_chain(30);
  Eigen::EigenSolver<Eigen::MatrixXd> es(L.to_dense());
  EigenRequest req;
  req.shift = cplx(0.0, 0.3);
  req.count = 6;
  const SpectrumResult r = shift_invert_arnoldi(L, req);
  ASSERT_EQ(r.size(), 6u);
  std::vector<cplx> ref(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ref.begin(), ref.end(), [&](cplx a, cplx b) { return std::abs(a - req.shift) < std::abs(b - req.shift); });
  for (std::size_t i = 0; i < 6; ++i) {
    double best = 1e300;
    for (std::size_t j = 0; j < 6; ++j) best = std::min(best, std::abs(r.eigenvalues[i] - ref[j]));
    EXPECT_LT(best, 1e-9);
    EXPECT_LE(r.residuals[i], 1e-10 * std::max(1.0, r.operator_norm));
  }
}

TEST(Eigensolver, SparseAndBandedAgree) {
  const auto L = rotation_chain(40);
  EigenRequest req;
  req.shift = cplx(0.05, 0.35);
  req.count = 5;
  const SpectrumResult a = shift_invert_arnoldi(L, req);
  const SpectrumResult b = shift_invert_arnoldi_sparse(L, req);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a.eigenvalues[i] - b.eigenvalues[i]), 1e-10);
}

TEST(Eigensolver, ShiftOnEigenvalueRetries) {
  const BandedOperator A = BandedOperator::diagonal(Vec::LinSpaced(20, 1, 20));
  EigenRequest req;
  req.shift = 3.0;
  req.count = 3;
  EXPECT_THROW(shift_invert_arnoldi(A, req), SingularShift);
  const SpectrumResult r = shift_invert_arnoldi_retry(A, req);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r.eigenvalues[0].real(), 3.0, 1e-10);
}

TEST(Eigensolver, Classification) {
  ClassifyOptions o;
  o.tol_zero = 0.01;
  EXPECT_EQ(classify(cplx(0.005, 0.001), o), SpectralClass::zero);
  EXPECT_EQ(classify(cplx(0.3, 0.0), o), SpectralClass::real_pair);
  EXPECT_EQ(classify(cplx(0.0, 0.4), o), SpectralClass::imaginary_pair);
  EXPECT_EQ(classify(cplx(0.0, 1.2), o), SpectralClass::continuous_band);
  EXPECT_EQ(classify(cplx(0.1, 0.4), o), SpectralClass::complex_quadruple);
  EXPECT_DOUBLE_EQ(default_tol_zero(0.01, 3.0, 3.0), 0.1);
  EXPECT_DOUBLE_EQ(default_tol_zero(0.01, 2.0, 3.0), 0.01);
}

TEST(Eigensolver, PairingViolations) {
  const std::vector<cplx> ok{{0.1, 0.2}, {-0.1, 0.2}, {0.1, -0.2}, {-0.1, -0.2}};
  const auto cls = classify_spectrum(ok, ClassifyOptions{});
  EXPECT_TRUE(pairing_violations(ok, cls, 0.0, 1.0, PairingSymmetry{}, 1e-9).empty());
  std::vector<cplx> bad = ok;
  bad.pop_back();
  EXPECT_EQ(pairing_violations(bad, classify_spectrum(bad, ClassifyOptions{}), 0.0, 1.0, PairingSymmetry{}, 1e-9).size(), 3u);
  // partner outside the disc is not demanded
  EXPECT_TRUE(pairing_violations({cplx(0.9, 0.0)}, {}, cplx(0.5, 0.0), 0.5, PairingSymmetry{true, false}, 1e-9).empty());
  EXPECT_EQ(mirror_violations({cplx(0.1, 0.2)}, {}, 0.0, 1.0, 1e-9).size(), 1u);
}

TEST(Eigensolver, WindowSearchKeepsMultiplicity) {
  // two identical decoupled copies of a chain with eigenvalues d_i +- i b_i,
  // |d_i| <= 0.025: every eigenvalue is double
  const std::size_t half = 12, n = 2 * half;
  BandedOperator D(n, n, 1, 1), Bd(n, n, 0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double j = static_cast<double>(i % half);
    D.ref(i, i) = 0.004 * j - 0.022;
    if (i + 1 < n && (i + 1) % half != 0) D.ref(i, i + 1) = 0.005;
    Bd.ref(i, i) = 0.05 + 0.04 * j;
  }
  BlockOperator<double> L(2, n);
  L.set(0, 0, D);
  L.set(0, 1, Bd);
  L.set(1, 0, Bd * -1.0);
  L.set(1, 1, D);
  WindowOptions w;
  w.y_max = 0.6;
  w.count = 6;
  const auto ev = window_search([&L](cplx s) { return make_block_map(L, s); }, w);
  Eigen::EigenSolver<Eigen::MatrixXd> es(L.to_dense());
  std::vector<cplx> expected;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i].imag()) <= 0.6) expected.push_back(es.eigenvalues()[i]);
  std::vector<cplx> found;
  for (cplx z : ev)
    if (std::abs(z.imag()) <= 0.6) found.push_back(z);
  ASSERT_EQ(found.size(), expected.size());
  for (cplx z : expected) {
    const auto near = std::count_if(found.begin(), found.end(), [z](cplx f) { return std::abs(f - z) < 1e-7; });
    EXPECT_EQ(near, 2) << z;
  }
}
