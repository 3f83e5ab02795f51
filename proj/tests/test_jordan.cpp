#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qpr/jordan.hpp"

using namespace qpr;
using namespace qpr::jordan;

namespace {

Matrix jordan_block(int size, Complex lambda = Complex(0, 0)) {
  Matrix j = lambda * Matrix::Identity(size, size);
  for (int i = 0; i + 1 < size; ++i) j(i, i + 1) = 1.0;
  return j;
}

Matrix nilpotent_from_structure(const std::vector<int>& sizes) {
  int n = 0;
  for (int s : sizes) n += s;
  Matrix m = Matrix::Zero(n, n);
  int off = 0;
  for (int s : sizes) {
    m.block(off, off, s, s) = jordan_block(s);
    off += s;
  }
  return m;
}

/// Random similarity with modest condition number.
Matrix random_similarity(int n, std::mt19937_64& rng, double amplitude = 0.3) {
  return Matrix::Identity(n, n) + random_matrix(n, n, rng, amplitude / n);
}

// --- column_echelon ---------------------------------------------------------

TEST(ColumnEchelon, SingleJordanBlock) {
  const Matrix n = jordan_block(3);
  const auto e = column_echelon(n);
  EXPECT_EQ(e.block_dims, (std::vector<int>{1, 1, 1}));
  EXPECT_LT(operator_norm(e.basis.adjoint() * e.basis - Matrix::Identity(3, 3)), 1e-12);
  // Echelon equals N up to column phases: pivot magnitudes are 1.
  ASSERT_EQ(e.pivots.size(), 2u);
  for (const auto& p : e.pivots) EXPECT_NEAR(std::abs(p.value), 1.0, 1e-12);
  EXPECT_LT(operator_norm(e.basis.adjoint() * n * e.basis - e.echelon), 1e-12);
}

TEST(ColumnEchelon, TwoByTwoPivot) {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = 2.0;
  const auto e = column_echelon(n);
  ASSERT_EQ(e.pivots.size(), 1u);
  EXPECT_EQ(e.pivots[0].row, 0);
  EXPECT_EQ(e.pivots[0].col, 1);
  EXPECT_NEAR(std::abs(e.pivots[0].value), 2.0, 1e-12);
}

TEST(ColumnEchelon, FiltrationMatchesRankOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix n = Matrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) n(i, j) = random_matrix(1, 1, rng)(0, 0);
    const auto e = column_echelon(n);
    const auto kdims = oracle::kernel_dims(n);
    std::vector<int> cumulative;
    int acc = 0;
    for (int r : e.block_dims) {
      acc += r;
      cumulative.push_back(acc);
    }
    for (size_t j = 0; j < cumulative.size(); ++j) EXPECT_EQ(cumulative[j], kdims[j]);
    // Non-increasing slice dimensions.
    for (size_t j = 1; j < e.block_dims.size(); ++j)
      EXPECT_LE(e.block_dims[j], e.block_dims[j - 1]);
  }
}

TEST(ColumnEchelon, ZeroMatrixTrivial) {
  const auto e = column_echelon(Matrix::Zero(3, 3));
  EXPECT_TRUE(e.echelon.isZero(0.0));
  EXPECT_TRUE(e.basis.isIdentity(0.0));
  EXPECT_TRUE(e.pivots.empty());
}

TEST(ColumnEchelon, RejectsNonNilpotent) {
  EXPECT_THROW(column_echelon(Matrix::Identity(2, 2)), std::invalid_argument);
}

// --- scale_pivots ------------------------------------------------------------

TEST(ScalePivots, UnitPivotsBalanced) {
  const auto e = column_echelon(jordan_block(3));
  const auto sc = scale_pivots(e, 0.5);
  for (const auto& p : e.pivots)
    EXPECT_LT(std::abs(sc.reduced(p.row, p.col) - Complex(1.0, 0.0)), 1e-14);
  // All chain products have magnitude 1, so the balanced diagonal is flat.
  for (int i = 1; i < 3; ++i)
    EXPECT_NEAR(std::abs(sc.scale(i)), std::abs(sc.scale(0)), 1e-12);
}

TEST(ScalePivots, TwoByTwoRecursion) {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = 2.0;
  const auto e = column_echelon(n);
  const auto sc = scale_pivots(e, 1.0);
  EXPECT_LT(std::abs(sc.reduced(0, 1) - Complex(1.0, 0.0)), 1e-14);
  // Hand recursion: s = (1, 1/2) balanced by sqrt(2); norms both sqrt(2).
  const double norm_s = std::max(std::abs(sc.scale(0)), std::abs(sc.scale(1)));
  EXPECT_NEAR(norm_s, std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(sc.checks.checks[0].pass);
}

TEST(ScalePivots, ThreeChainBound) {
  Matrix n = Matrix::Zero(3, 3);
  n(0, 1) = 2.0;
  n(1, 2) = 4.0;
  const auto e = column_echelon(n);
  const auto sc = scale_pivots(e, 1.9);
  // Direct recursion oracle: s = (1, 1/2, 1/8) balanced; ||S|| ||S^-1|| = 8.
  double smax = 0.0, smin = 1e300;
  for (int i = 0; i < 3; ++i) {
    smax = std::max(smax, std::abs(sc.scale(i)));
    smin = std::min(smin, std::abs(sc.scale(i)));
  }
  EXPECT_NEAR(smax / smin, 8.0, 1e-10);
  const double bound = std::pow(operator_norm(e.echelon) / 1.9, 3.0);
  EXPECT_LE(smax / smin, bound);
  for (const auto& p : e.pivots)
    EXPECT_LT(std::abs(sc.reduced(p.row, p.col) - Complex(1.0, 0.0)), 1e-14);
}

TEST(ScalePivots, SmallPivotRejected) {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = 0.1;
  const auto e = column_echelon(n);
  EXPECT_THROW(scale_pivots(e, 0.5), CertificateFailure);
}

// --- echelonize_iterate ------------------------------------------------------

TEST(EchelonizeIterate, UnitPivotsOneStep) {
  const Matrix n = jordan_block(2);
  const auto res = echelonize_iterate(n, {2}, 1e-3, DeltaSchedule::paper_default(2, 1, 5));
  EXPECT_EQ(res.k_used, 1);
  EXPECT_LT(operator_norm(res.F), 1e-14);
  EXPECT_LT(operator_norm(res.S_inv * n * res.S - res.A_prime), 1e-13);
  EXPECT_TRUE(res.checks.all_pass());
}

TEST(EchelonizeIterate, TinyPivotThresholded) {
  // delta_1 chosen so eps^2 < eps^{delta_1}: the pivot is removed, A' = 0.
  const double eps = 1e-2;
  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = eps * eps;
  const auto schedule = DeltaSchedule::custom({1.0, 0.5, 0.25}, 2, 1);
  const auto res = echelonize_iterate(n, {2}, eps, schedule);
  EXPECT_TRUE(res.A_prime.isZero(0.0));
  EXPECT_LE(operator_norm(res.F), std::pow(eps, 0.5));
  EXPECT_EQ(res.k_used, 2);
}

TEST(EchelonizeIterate, KernelsOnlyGrow) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 8; ++trial) {
    const Matrix model = nilpotent_from_structure({2, 1, 1});
    const Matrix q = random_similarity(4, rng);
    const Matrix n = 0.5 * (q.inverse() * model * q);
    const auto res = echelonize_iterate(n, {4}, 1e-3, DeltaSchedule::paper_default(4, 1, 17));
    const auto before = oracle::kernel_dims(n);
    const auto after = oracle::kernel_dims(res.A_prime);
    for (size_t j = 0; j < before.size(); ++j) EXPECT_GE(after[j], before[j]);
  }
}

TEST(EchelonizeIterate, ZeroInputIdentityConjugation) {
  const auto res = echelonize_iterate(Matrix::Zero(3, 3), {3}, 0.5,
                                      DeltaSchedule::paper_default(3, 1, 10));
  EXPECT_TRUE(res.S.isIdentity(0.0));
  EXPECT_TRUE(res.A_prime.isZero(0.0));
}

TEST(DeltaScheduleChecks, PaperDefaultShape) {
  const auto s = DeltaSchedule::paper_default(2, 1, 4);
  EXPECT_EQ(s.c_n, 2.0 * 3.0 * 24.0 + 2.0);  // 2(n+1)(2n)! + n
  EXPECT_DOUBLE_EQ(s.at(0), 1.0);
  EXPECT_DOUBLE_EQ(s.at(1), 1.0 / (2.0 * 3.0 * s.c_n));
  // Condition holds at index 1 and 2 for any eps in (0,1).
  EXPECT_TRUE(s.condition_holds(1e-3, 2));
}

TEST(DeltaScheduleChecks, CustomValidation) {
  EXPECT_THROW(DeltaSchedule::custom({0.5, 0.2}, 2, 1), std::invalid_argument);
  EXPECT_THROW(DeltaSchedule::custom({1.0, 1.2}, 2, 1), std::invalid_argument);
}

// --- reduced_to_jordan -------------------------------------------------------

TEST(ReducedToJordan, AlreadyJordan) {
  const Matrix a = jordan_block(2);
  const auto res = reduced_to_jordan(a, {2});
  EXPECT_TRUE(res.S.isIdentity(0.0));
  EXPECT_LT(operator_norm(res.J - a), 1e-15);
}

TEST(ReducedToJordan, OneTransvection) {
  // A = [[0,1,1],[0,0,1],[0,0,0]]: a single transvection with
  // M = E_{0,1}, a = A(0,2) removes the (0,2) entry.
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = 1.0;
  a(0, 2) = 1.0;
  a(1, 2) = 1.0;
  const auto res = reduced_to_jordan(a, {3});
  EXPECT_LT(operator_norm(res.J - jordan_block(3)), 1e-15);
  // Hand oracle: B = (I - aM) A (I + aM).
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = 1.0;
  const Matrix b = (Matrix::Identity(3, 3) - m) * a * (Matrix::Identity(3, 3) + m);
  EXPECT_LT(operator_norm(b - jordan_block(3)), 1e-15);
  EXPECT_LT(operator_norm(res.S_inv * a * res.S - res.J), 1e-14);
}

TEST(ReducedToJordan, RandomEchelonRankOracle) {
  std::mt19937_64 rng(33);
  // Build random reduced-echelon 5x5 with levels (2, 2, 1): pivots 1 and
  // random entries in the allowed staircase region.
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = Matrix::Zero(5, 5);
    // levels r = (2,2,1): offsets 0,2,4; pivots: (0,2),(1,3),(2,4).
    a(0, 2) = 1.0;
    a(1, 3) = 1.0;
    a(2, 4) = 1.0;
    std::normal_distribution<double> g(0.0, 1.0);
    a(0, 3) = Complex(g(rng), g(rng));  // above pivot (1,3)
    a(0, 4) = Complex(g(rng), g(rng));  // above pivot (2,4), earlier block rows
    a(1, 4) = Complex(g(rng), g(rng));
    const auto res = reduced_to_jordan(a, {5});
    const auto ra = oracle::rank_of_powers(a);
    const auto rj = oracle::rank_of_powers(res.J);
    EXPECT_EQ(ra, rj);
    EXPECT_LT(operator_norm(res.S_inv * a * res.S - res.J), 1e-12 * operator_norm(a));
  }
}

TEST(ReducedToJordan, RejectsNonUnitPivot) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 2.0;
  EXPECT_THROW(reduced_to_jordan(a, {2}), std::invalid_argument);
}

// --- nilpotent_jnf -----------------------------------------------------------

TEST(NilpotentJnf, JordanBlockPassesThrough) {
  const Matrix n = jordan_block(3);
  const auto cert = nilpotent_jnf(n, {3}, 1e-3, 2);
  EXPECT_LT(operator_norm(cert.J - n), 1e-13);
  EXPECT_LT(operator_norm(cert.F_residual), 1e-13);
  EXPECT_TRUE(cert.checks.all_pass());
}

TEST(NilpotentJnf, HalfPivotSurvivesWithTinyEps) {
  // eps = 1e-270, m = 1, n = 2: threshold eps^{delta_1} ~ 0.49 < 0.5, so the
  // 0.5 pivot survives and is scaled to 1.
  const Matrix n = 0.5 * jordan_block(2);
  const auto cert = nilpotent_jnf(n, {2}, 1e-270, 1);
  EXPECT_LT(operator_norm(cert.J - jordan_block(2)), 1e-13);
  EXPECT_LT(operator_norm(cert.F_residual), 1e-14);
  EXPECT_TRUE(cert.checks.all_pass());
}

TEST(NilpotentJnf, RandomCertificatesPass) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix model = nilpotent_from_structure({2, 2});
    const Matrix q = random_similarity(4, rng);
    const Matrix n = 0.5 * (q.inverse() * model * q);
    const auto cert = nilpotent_jnf(n, {4}, 1e-3, 2);
    EXPECT_TRUE(cert.checks.all_pass());
    // Structure preserved by construction: J vs S^{-1} N S - F, compared at
    // the scale of the input problem.
    const Matrix back = cert.S_inv * n * cert.S - cert.F_residual;
    const double scale = operator_norm(n) * operator_norm(cert.S) * operator_norm(cert.S_inv);
    EXPECT_EQ(oracle::rank_of_powers(cert.J, scale), oracle::rank_of_powers(back, scale));
  }
}

TEST(NilpotentJnf, RejectsZero) {
  EXPECT_THROW(nilpotent_jnf(Matrix::Zero(2, 2), {2}, 0.5, 1), std::invalid_argument);
}

// --- jordan_structure / same_structure ---------------------------------------

TEST(JordanStructure, KnownSequences) {
  EXPECT_EQ(jordan_structure(jordan_block(3), 1e-9), (std::vector<int>{2, 1, 0}));
  EXPECT_EQ(jordan_structure(nilpotent_from_structure({2, 2}), 1e-9),
            (std::vector<int>{2, 0, 0, 0}));
}

TEST(JordanStructure, SimilarityInvariant) {
  std::mt19937_64 rng(35);
  const Matrix model = nilpotent_from_structure({3, 1});
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix q = random_similarity(4, rng);
    const Matrix n = q.inverse() * model * q;
    EXPECT_EQ(jordan_structure(n, 1e-9), jordan_structure(model, 1e-9));
  }
}

TEST(SameStructure, IdentityTrivial) {
  const auto rep = same_structure(jordan_block(2), jordan_block(2), Matrix::Identity(2, 2), 1.0);
  EXPECT_EQ(rep.verdict, StructureVerdict::GuaranteedEqual);
  EXPECT_EQ(rep.epsilon, 0.0);
}

TEST(SameStructure, DifferentStructuresDetected) {
  const auto rep = same_structure(jordan_block(2), Matrix::Zero(2, 2), Matrix::Identity(2, 2), 1.0);
  EXPECT_EQ(rep.verdict, StructureVerdict::Inconclusive);
  EXPECT_FALSE(rep.ranks_equal);
}

TEST(SameStructure, NearCommutingWithinThreshold) {
  std::mt19937_64 rng(36);
  const Matrix j3 = jordan_block(3);
  // C commutes with J_3 up to a 1e-9 perturbation; threshold for n = 3,
  // xi = 2 is 1/(3 * 6 * 8) ~ 6.9e-3.
  Matrix c = Matrix::Identity(3, 3) + 0.3 * j3 + 0.2 * j3 * j3;
  c += 1e-9 * random_matrix(3, 3, rng);
  const double xi = std::max(operator_norm(c), operator_norm(c.inverse().eval()));
  ASSERT_LE(xi, 2.0);
  const auto rep = same_structure(j3, j3, c, xi);
  EXPECT_EQ(rep.verdict, StructureVerdict::GuaranteedEqual);
}

TEST(SameStructure, SingularCRejected) {
  EXPECT_THROW(same_structure(jordan_block(2), jordan_block(2), Matrix::Zero(2, 2), 1.0),
               std::invalid_argument);
}

// --- realify_jordan -----------------------------------------------------------

TEST(RealifyJordan, RotationPair) {
  Matrix j = Matrix::Zero(2, 2);
  j(0, 0) = Complex(0.0, 1.0);
  j(1, 1) = Complex(0.0, -1.0);
  const auto res = realify_jordan(j);
  RealMatrix expected(2, 2);
  expected << 0, 1, -1, 0;
  EXPECT_LT(operator_norm(res.R - expected), 1e-14);
  EXPECT_LT(operator_norm(res.P.adjoint() * res.P - Matrix::Identity(2, 2)), 1e-14);
  EXPECT_TRUE(res.checks.all_pass());
}

TEST(RealifyJordan, RealPassThrough) {
  Matrix j = jordan_block(3, Complex(2.0, 0.0));
  const auto res = realify_jordan(j);
  EXPECT_TRUE(res.P.isIdentity(0.0));
  EXPECT_LT(operator_norm(res.R.cast<Complex>() - j), 1e-14);
}

TEST(RealifyJordan, ConjugatePairWithNilpotent) {
  // J = diag(alpha I2 + N2, conj(alpha) I2 + N2), alpha = 1 + 2i.
  const Complex alpha(1.0, 2.0);
  Matrix j = Matrix::Zero(4, 4);
  j.block(0, 0, 2, 2) = jordan_block(2, alpha);
  j.block(2, 2, 2, 2) = jordan_block(2, std::conj(alpha));
  const auto res = realify_jordan(j);
  RealMatrix expected(4, 4);
  expected << 1, 2, 1, 0,
             -2, 1, 0, 1,
              0, 0, 1, 2,
              0, 0, -2, 1;
  EXPECT_LT(operator_norm(res.R - expected), 1e-13);
  EXPECT_TRUE(res.checks.all_pass());
}

TEST(RealifyJordan, RejectsUnstableSpectrum) {
  Matrix j = Complex(0.0, 1.0) * Matrix::Identity(2, 2);
  EXPECT_THROW(realify_jordan(j), std::invalid_argument);
}

TEST(RealifyJordan, RejectsStructureMismatch) {
  // alpha has a 2-block, conj(alpha) two 1-blocks.
  const Complex alpha(0.0, 1.0);
  Matrix j = Matrix::Zero(4, 4);
  j.block(0, 0, 2, 2) = jordan_block(2, alpha);
  j(2, 2) = std::conj(alpha);
  j(3, 3) = std::conj(alpha);
  EXPECT_THROW(realify_jordan(j), std::invalid_argument);
}

TEST(IsJordanForm, Predicate) {
  EXPECT_TRUE(is_jordan_form(jordan_block(3, Complex(1.0, 2.0))));
  Matrix bad = jordan_block(3);
  bad(0, 1) = 0.5;
  EXPECT_FALSE(is_jordan_form(bad));
  Matrix mixed = Matrix::Zero(2, 2);
  mixed(0, 0) = 1.0;
  mixed(1, 1) = 2.0;
  mixed(0, 1) = 1.0;  // superdiagonal 1 joining distinct eigenvalues
  EXPECT_FALSE(is_jordan_form(mixed));
}

}  // namespace
