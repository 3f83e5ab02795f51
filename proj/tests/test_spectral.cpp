#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qpr/spectral.hpp"

using namespace qpr;
using namespace qpr::spectral;

namespace {

/// BFS components oracle for the Gamma-cluster graph.
std::vector<std::vector<int>> bfs_clusters(const std::vector<Complex>& spec, double gamma) {
  const int n = static_cast<int>(spec.size());
  std::vector<bool> seen(n, false);
  std::vector<std::vector<int>> comps;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<int> comp{s};
    seen[s] = true;
    for (size_t head = 0; head < comp.size(); ++head) {
      for (int j = 0; j < n; ++j) {
        if (!seen[j] && std::abs(spec[comp[head]] - spec[j]) <= gamma) {
          seen[j] = true;
          comp.push_back(j);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(comp);
  }
  return comps;
}

std::vector<Complex> spectrum_of(const Matrix& m) { return sorted_spectrum(m); }

TEST(GammaClusters, TwoSingles) {
  const auto part = gamma_clusters({Complex(0, 0), Complex(3, 0)}, 1.0);
  EXPECT_EQ(part.clusters.size(), 2u);
}

TEST(GammaClusters, ChainTransitivity) {
  const auto part = gamma_clusters({Complex(0, 0), Complex(0.5, 0), Complex(1.0, 0)}, 0.6);
  EXPECT_EQ(part.clusters.size(), 1u);
}

TEST(GammaClusters, MatchesBfsOracle) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Complex> spec;
    for (int i = 0; i < 10; ++i) spec.emplace_back(u(rng), u(rng));
    for (double gamma : {0.1, 0.5, 1.0, 2.0}) {
      const auto part = gamma_clusters(spec, gamma);
      auto oracle_comps = bfs_clusters(spec, gamma);
      // Compare as sorted sets of sorted members.
      std::vector<std::vector<int>> got = part.clusters;
      for (auto& c : got) std::sort(c.begin(), c.end());
      std::sort(got.begin(), got.end());
      std::sort(oracle_comps.begin(), oracle_comps.end());
      EXPECT_EQ(got, oracle_comps);
    }
  }
}

TEST(GammaClusters, EmptyRejected) {
  EXPECT_THROW(gamma_clusters({}, 1.0), std::invalid_argument);
}

TEST(DecoupleBlocks, SingleBackSubstitution) {
  Matrix t(2, 2);
  t << Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(3, 0);
  const Matrix r = decouple_blocks(t, 1, 1.0);
  // (1 - 3) R = -1 => R = 1/2; M = [[1, 1/2], [0, 1]] diagonalizes.
  EXPECT_LT(std::abs(r(0, 0) - Complex(0.5, 0)), 1e-15);
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = r(0, 0);
  Matrix m_inv = Matrix::Identity(2, 2);
  m_inv(0, 1) = -r(0, 0);
  const Matrix d = m_inv * t * m;
  EXPECT_LT(std::abs(d(0, 1)), 1e-15);
}

TEST(DecoupleBlocks, ZeroCouplingZeroSolution) {
  Matrix t = Matrix::Zero(3, 3);
  t(0, 0) = 1.0;
  t(1, 1) = 5.0;
  t(2, 2) = 6.0;
  const Matrix r = decouple_blocks(t, 1, 1.0);
  EXPECT_TRUE(r.isZero(0.0));
}

TEST(DecoupleBlocks, ResidualOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    // Upper triangular with clusters {1 +- 0.1} and {5 +- 0.1}.
    Matrix t = Matrix::Zero(4, 4);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    t(0, 0) = 1.0 + u(rng);
    t(1, 1) = 1.0 + u(rng);
    t(2, 2) = 5.0 + u(rng);
    t(3, 3) = 5.0 + u(rng);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) t(i, j) = random_matrix(1, 1, rng)(0, 0);
    CheckList log;
    const Matrix r = decouple_blocks(t, 2, 1.0, &log);
    Matrix m = Matrix::Identity(4, 4), m_inv = Matrix::Identity(4, 4);
    m.block(0, 2, 2, 2) = r;
    m_inv.block(0, 2, 2, 2) = -r;
    const Matrix d = m_inv * t * m;
    EXPECT_LT(operator_norm(d.block(0, 2, 2, 2)), 1e-11);
    EXPECT_TRUE(log.checks[0].pass);  // every divisor >= Gamma
  }
}

TEST(DecoupleBlocks, ViolatedSeparationReported) {
  Matrix t(2, 2);
  t << Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(1.2, 0);
  EXPECT_THROW(decouple_blocks(t, 1, 1.0), CertificateFailure);
}

TEST(SeparateSpectrum, NormalDiagonal) {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 0) = 1.0;
  b(1, 1) = 5.0;
  const auto dec = separate_spectrum(b, 1.0);
  EXPECT_LT(operator_norm(dec.M.adjoint() * dec.M - Matrix::Identity(2, 2)), 1e-12);
  EXPECT_LT(operator_norm(dec.D - b), 1e-12);
  EXPECT_EQ(dec.block_dims.size(), 2u);
}

TEST(SeparateSpectrum, TwoByTwoTriangular) {
  Matrix b(2, 2);
  b << Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(3, 0);
  const auto dec = separate_spectrum(b, 1.0);
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  expected(1, 1) = 3.0;
  EXPECT_LT(operator_norm(dec.D - expected), 1e-12);
  EXPECT_LT(dec.residual, 1e-12);
}

TEST(SeparateSpectrum, RandomTwoClusters) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    // Spectrum split {-2 +- 0.3} vs {+2 +- 0.3}: gap > 2 Gamma with Gamma = 1.
    Matrix diag = Matrix::Zero(5, 5);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < 3; ++i) diag(i, i) = Complex(-2.0 + u(rng), u(rng));
    for (int i = 3; i < 5; ++i) diag(i, i) = Complex(2.0 + u(rng), u(rng));
    Matrix q = Matrix::Identity(5, 5) + random_matrix(5, 5, rng, 0.1);
    const Matrix b = q.inverse() * diag * q;
    const auto dec = separate_spectrum(b, 1.0);
    EXPECT_LT(dec.residual, 1e-10 * operator_norm(b));
    // Eigenvalue multiset preserved.
    const auto sb = spectrum_of(b);
    const auto sd = spectrum_of(dec.D);
    for (size_t i = 0; i < sb.size(); ++i) EXPECT_LT(std::abs(sb[i] - sd[i]), 1e-9);
    EXPECT_TRUE(dec.checks.all_pass());
  }
}

TEST(AdaptiveSeparation, AllEqualStabilizesImmediately) {
  const Matrix a = Complex(2.0, 0.0) * Matrix::Identity(3, 3);
  const auto res = adaptive_separation(a, {1.0, 0.5, 0.25});
  EXPECT_EQ(res.d0, 1);
  EXPECT_EQ(res.decoupling.block_dims.size(), 1u);
}

TEST(AdaptiveSeparation, HandRunInduction) {
  Matrix a = Matrix::Zero(2, 2);
  a(1, 1) = 1.0;
  const auto res = adaptive_separation(a, {2.0, 0.5, 0.25});
  EXPECT_EQ(res.d0, 2);
  EXPECT_EQ(res.decoupling.block_dims.size(), 2u);
}

TEST(AdaptiveSeparation, BlocksConnectedAndSeparated) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix diag = Matrix::Zero(4, 4);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 4; ++i) diag(i, i) = Complex(u(rng), u(rng));
    Matrix q = Matrix::Identity(4, 4) + random_matrix(4, 4, rng, 0.05);
    const Matrix a = q.inverse() * diag * q;
    const std::vector<double> gammas{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
    const auto res = adaptive_separation(a, gammas);
    const double g = gammas[res.d0];
    // Every block Gamma_{d0}-connected, distinct blocks Gamma_{d0}-separated.
    for (const auto& spec : res.decoupling.cluster_spectra)
      EXPECT_TRUE(gamma_connected(spec, g));
    for (size_t i = 0; i < res.decoupling.cluster_spectra.size(); ++i)
      for (size_t j = i + 1; j < res.decoupling.cluster_spectra.size(); ++j)
        for (const auto& x : res.decoupling.cluster_spectra[i])
          for (const auto& y : res.decoupling.cluster_spectra[j])
            EXPECT_GT(std::abs(x - y), g);
  }
}

TEST(AdaptiveSeparation, ExhaustionReported) {
  Matrix a = Matrix::Zero(2, 2);
  a(1, 1) = 1.0;
  // Gamma_0 = 2 merges {0, 1}, the merged block is not 0.5-connected, and
  // there is no Gamma_2 to continue with.
  EXPECT_THROW(adaptive_separation(a, {2.0, 0.5}), HypothesisFailure);
}

TEST(SingleEigenvalueBlocks, ExactBlock) {
  Matrix d = Matrix::Identity(2, 2);
  const auto res = to_single_eigenvalue_blocks(d, {2}, 1e-6);
  EXPECT_TRUE(res.F_hat.isZero(0.0));
  EXPECT_LT(std::abs(res.representatives[0] - Complex(1.0, 0.0)), 1e-15);
}

TEST(SingleEigenvalueBlocks, MeanCentering) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1.0 + 1e-6;
  d(0, 1) = 0.5;
  const auto res = to_single_eigenvalue_blocks(d, {2}, 1e-6);
  EXPECT_NEAR(std::abs(res.F_hat(0, 0)), 5e-7, 1e-12);
  EXPECT_NEAR(std::abs(res.F_hat(1, 1)), 5e-7, 1e-12);
  // Identity holds bitwise.
  EXPECT_TRUE((res.B_hat + res.F_hat) == d);
}

TEST(SingleEigenvalueBlocks, RandomSplit) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix d = Matrix::Zero(4, 4);
    const Complex base(u(rng), u(rng));
    const double threshold = 1e-4;
    for (int i = 0; i < 4; ++i) d(i, i) = base + threshold * Complex(u(rng), u(rng));
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) d(i, j) = Complex(u(rng), u(rng));
    const auto res = to_single_eigenvalue_blocks(d, {4}, threshold);
    EXPECT_TRUE((res.B_hat + res.F_hat) == d);
    double max_f = 0.0;
    for (int i = 0; i < 4; ++i) max_f = std::max(max_f, std::abs(res.F_hat(i, i)));
    EXPECT_LE(max_f, 4 * threshold);
    // All diagonal entries of B_hat agree with the representative to 1 ulp scale.
    for (int i = 0; i < 4; ++i)
      EXPECT_LT(std::abs(res.B_hat(i, i) - res.representatives[0]), 1e-14);
  }
}

TEST(SingleEigenvalueBlocks, SpreadRejected) {
  Matrix d = Matrix::Zero(2, 2);
  d(1, 1) = 1.0;
  EXPECT_THROW(to_single_eigenvalue_blocks(d, {2}, 1e-3), HypothesisFailure);
}

}  // namespace
