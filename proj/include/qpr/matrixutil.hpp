#pragma once

// Small dense complex-matrix helpers shared by all modules. Matrices are
// desk-scale (n <= ~8), so everything goes through Eigen's dense kernels.

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace qpr {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

/// Largest singular value. This is the operator norm used throughout.
template <typename Derived>
inline double operator_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  using Plain = typename Derived::PlainObject;
  const Plain mm = m.eval();
  return Eigen::JacobiSVD<Plain>(mm).singularValues()(0);
}

/// Max operator norm over a set of matrices. The Frobenius norm upper-bounds
/// the operator norm, so the SVD only runs where it could raise the maximum.
inline double max_operator_norm(const std::vector<Matrix>& values) {
  double best = 0.0;
  for (const Matrix& v : values) {
    if (v.norm() <= best) continue;
    best = std::max(best, operator_norm(v));
  }
  return best;
}

/// Rank with a relative singular-value threshold.
inline int numerical_rank(const Matrix& m, double rel_tol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

/// Orthonormal basis of the kernel (columns), threshold relative to sigma_max.
inline Matrix kernel_basis(const Matrix& m, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (smax > 0.0 && sv(i) > rel_tol * smax) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

/// Kernel basis with an absolute singular-value threshold. Needed for powers
/// of nilpotent matrices, where a numerically-zero matrix must not be
/// mistaken for a full-rank one by a purely relative cut.
inline Matrix kernel_basis_abs(const Matrix& m, double abs_tol) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > abs_tol) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

/// Rank with an absolute singular-value threshold.
inline int numerical_rank_abs(const Matrix& m, double abs_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > abs_tol) ++r;
  return r;
}

/// Transpose of the cofactor matrix, so that Z * adjugate(Z) = det(Z) * I.
inline Matrix adjugate(const Matrix& z) {
  const Eigen::Index n = z.rows();
  if (n != z.cols()) throw std::invalid_argument("adjugate: matrix not square");
  if (n == 1) return Matrix::Identity(1, 1);
  Matrix adj(n, n);
  Matrix minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc) = z(r, c);
          ++cc;
        }
        ++rr;
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(j, i) = sign * minor.determinant();
    }
  }
  return adj;
}

/// Sorted (by real part, then imaginary part) eigenvalues.
inline std::vector<Complex> sorted_spectrum(const Matrix& m) {
  Eigen::ComplexEigenSolver<Matrix> es(m, false);
  std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

inline bool lex_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Matrix exponential by scaling-and-squaring over a plain Taylor series;
/// adequate for the small well-scaled matrices this library works with.
inline Matrix matrix_exp(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  int squarings = 0;
  double norm = operator_norm(a);
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const Matrix scaled = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(n, n);
  Matrix sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = (term * scaled / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

/// Random matrix with independent standard-normal real and imaginary parts.
inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * Complex(g(rng), g(rng));
  return m;
}

inline RealMatrix random_real_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * g(rng);
  return m;
}

}  // namespace qpr
