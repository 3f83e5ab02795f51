#pragma once

// Jordan normal form of nilpotent (block-nilpotent) matrices with explicit,
// certificate-checked bounds on the conjugation: column echelon staircase,
// pivot scaling, iterated thresholded echelonization, transvection
// elimination to Jordan form, structure comparison, and realification of
// Jordan matrices with conjugation-stable spectrum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "qpr/certificates.hpp"
#include "qpr/matrixutil.hpp"

namespace qpr::jordan {

// ---------------------------------------------------------------------------
// Column echelon form
// ---------------------------------------------------------------------------

struct Pivot {
  int row = 0;
  int col = 0;
  Complex value{0.0, 0.0};
};

struct EchelonForm {
  Matrix basis;                // unitary; basis^H N basis = echelon
  Matrix echelon;              // staircase with exact structural zeros
  std::vector<int> block_dims; // r_j = dim U_j, non-increasing
  std::vector<Pivot> pivots;   // last nonzero entry of each nonzero column
};

namespace detail {

inline std::string format_index(int i) { return std::to_string(i); }

/// Orthonormal basis of U_j = K_j cap K_{j-1}^perp given orthonormal bases of
/// the two kernels.
inline Matrix subspace_complement(const Matrix& kj, const Matrix& kjm1, int expected_dim) {
  Matrix projected = kj;
  if (kjm1.cols() > 0) projected -= kjm1 * (kjm1.adjoint() * kj);
  Eigen::JacobiSVD<Matrix> svd(projected, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 0.5) ++r;
  if (r != expected_dim)
    throw std::runtime_error("column_echelon: inconsistent kernel filtration (U_j dimension " +
                             format_index(r) + " vs expected " + format_index(expected_dim) + ")");
  return svd.matrixU().leftCols(r);
}

}  // namespace detail

/// Unitary conjugation of a nonzero nilpotent matrix to column echelon form
/// (strictly increasing column lengths, pivots as last nonzero entries).
/// The staircase structure of the result is enforced exactly: entries that
/// vanish in exact arithmetic are set to zero after a magnitude check.
inline EchelonForm column_echelon(const Matrix& N, double rank_tol = 1e-9) {
  const int n = static_cast<int>(N.rows());
  if (N.cols() != n) throw std::invalid_argument("column_echelon: matrix not square");

  EchelonForm out;
  const double norm_n = operator_norm(N);
  if (norm_n == 0.0) {
    out.basis = Matrix::Identity(n, n);
    out.echelon = Matrix::Zero(n, n);
    out.block_dims = {n};
    return out;
  }

  // Nilpotency gate: ||N^n|| <= rank_tol ||N||^n.
  Matrix power = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) power = power * N;
  if (operator_norm(power) > rank_tol * std::pow(norm_n, n)) {
    Eigen::ComplexEigenSolver<Matrix> es(N, false);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    throw std::invalid_argument("column_echelon: matrix is not nilpotent (spectral radius " +
                                std::to_string(rho) + ")");
  }

  // Kernel filtration K_j = ker N^j and the slices U_j. Thresholds anchor at
  // ||N||^j so numerically-zero powers resolve to full kernels.
  std::vector<Matrix> kernels;   // orthonormal bases, kernels[j-1] = basis of K_j
  std::vector<int> dims;
  {
    Matrix p = N;
    double scale = norm_n;
    while (true) {
      Matrix kb = kernel_basis_abs(p, rank_tol * scale);
      kernels.push_back(kb);
      dims.push_back(static_cast<int>(kb.cols()));
      if (static_cast<int>(kb.cols()) == n) break;
      if (static_cast<int>(kernels.size()) > n)
        throw std::runtime_error("column_echelon: kernel filtration fails to exhaust C^n");
      p = p * N;
      scale *= norm_n;
    }
  }
  const int m = static_cast<int>(kernels.size());
  std::vector<int> r(m);
  r[0] = dims[0];
  for (int j = 1; j < m; ++j) r[j] = dims[j] - dims[j - 1];
  for (int j = 1; j < m; ++j)
    if (r[j] > r[j - 1])
      throw std::runtime_error("column_echelon: U_j dimensions not non-increasing");

  // Bases B^j of U_j, from the top slice downward (Gram-Schmidt realized as
  // an orthogonal factorization of the projected images).
  std::vector<Matrix> bases(m);
  bases[m - 1] = detail::subspace_complement(kernels[m - 1],
                                             m >= 2 ? kernels[m - 2] : Matrix(n, 0), r[m - 1]);
  for (int j = m - 1; j >= 1; --j) {
    const Matrix u_above = bases[j];                       // B^{j+1} in 1-based terms
    const Matrix q = detail::subspace_complement(kernels[j - 1],
                                                 j >= 2 ? kernels[j - 2] : Matrix(n, 0), r[j - 1]);
    const Matrix v = q.adjoint() * (N * u_above);          // coords of projections in U_j
    Eigen::HouseholderQR<Matrix> qr(v);
    const Matrix qc = qr.householderQ() * Matrix::Identity(r[j - 1], r[j - 1]);
    const Matrix rr = qc.adjoint() * v;
    for (int k = 0; k < static_cast<int>(v.cols()); ++k)
      if (std::abs(rr(k, k)) < rank_tol * (1.0 + norm_n))
        throw std::runtime_error("column_echelon: projected images numerically dependent");
    bases[j - 1] = q * qc;
  }

  out.basis = Matrix(n, n);
  std::vector<int> offset(m + 1, 0);
  for (int j = 0; j < m; ++j) {
    offset[j + 1] = offset[j] + r[j];
    out.basis.middleCols(offset[j], r[j]) = bases[j];
  }
  out.block_dims = r;

  // Assemble the staircase and enforce its exact zeros.
  Matrix e = out.basis.adjoint() * N * out.basis;
  const double drop_tol = std::max(rank_tol, 1e-8) * (1.0 + norm_n);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < r[j]; ++k) {
      const int col = offset[j] + k;
      const int allowed_last_row = (j == 0) ? -1 : offset[j - 1] + k;
      for (int row = allowed_last_row + 1; row < n; ++row) {
        if (std::abs(e(row, col)) > drop_tol)
          throw std::runtime_error("column_echelon: staircase structure violated at (" +
                                   detail::format_index(row) + ", " + detail::format_index(col) +
                                   ")");
        e(row, col) = Complex(0.0, 0.0);
      }
      if (j > 0) out.pivots.push_back({allowed_last_row, col, e(allowed_last_row, col)});
    }
  }
  out.echelon = e;
  return out;
}

// ---------------------------------------------------------------------------
// Pivot scaling (reduced column echelon form)
// ---------------------------------------------------------------------------

struct ScaledEchelon {
  Eigen::VectorXcd scale;  // diagonal of S
  Matrix reduced;          // S^{-1} echelon S, pivots exactly 1
  double bound = 0.0;      // provable bound on ||S|| and ||S^{-1}||
  CheckList checks;
};

/// Diagonal scaling making all pivots 1. The balanced scaling keeps
/// ||S^{+-1}|| <= (max(1, ||B||)/delta)^{n/2}; the paper states the bound
/// with ||B|| in place of max(1, ||B||), which is recorded as a logged check
/// (it can fail when ||B|| < 1).
inline ScaledEchelon scale_pivots(const EchelonForm& ech, double delta) {
  const int n = static_cast<int>(ech.echelon.rows());
  if (!(delta > 0.0)) throw std::invalid_argument("scale_pivots: delta must be positive");
  for (const auto& p : ech.pivots) {
    if (std::abs(p.value) < delta)
      throw CertificateFailure("scale_pivots: pivot at (" + std::to_string(p.row) + ", " +
                               std::to_string(p.col) + ") has magnitude " +
                               std::to_string(std::abs(p.value)) + " below delta");
  }

  // s(col) solves s(pivot_row) / s(col) * pivot = 1 along each staircase
  // chain, starting from 1 on the first (kernel-slice) block.
  Eigen::VectorXcd s = Eigen::VectorXcd::Ones(n);
  for (const auto& p : ech.pivots) s(p.col) = s(p.row) / p.value;

  double smax = 0.0, smin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    smax = std::max(smax, std::abs(s(i)));
    smin = std::min(smin, std::abs(s(i)));
  }
  const double balance = 1.0 / std::sqrt(smax * smin);
  s *= balance;

  ScaledEchelon out;
  out.scale = s;
  out.reduced = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.reduced(i, j) = ech.echelon(i, j) * s(j) / s(i);
  for (const auto& p : ech.pivots) out.reduced(p.row, p.col) = Complex(1.0, 0.0);

  const double norm_b = operator_norm(ech.echelon);
  const double actual = std::sqrt(smax / smin);  // = ||S|| = ||S^{-1}|| after balancing
  out.bound = std::pow(std::max(1.0, norm_b) / delta, n / 2.0);
  out.checks.add(Check::leq_log("scale_pivots.balanced_bound", std::log(actual),
                                (n / 2.0) * std::log(std::max(1.0, norm_b) / delta)));
  out.checks.add(Check::leq_log("scale_pivots.paper_form", std::log(actual),
                                (n / 2.0) * (std::log(norm_b) - std::log(delta)))
                     .as_advisory());
  return out;
}

// ---------------------------------------------------------------------------
// Delta schedule
// ---------------------------------------------------------------------------

/// c_n = 2(n+1)(2n)! + n.
inline double jordan_constant(int n) {
  double f = 1.0;
  for (int i = 2; i <= 2 * n; ++i) f *= i;
  return 2.0 * (n + 1) * f + n;
}

/// Positive decreasing sequence delta_0 = 1, delta_{k-1} = 2(m+2) c_n delta_k.
/// The summability condition eps^{delta_1} + ... + eps^{delta_k} <=
/// 2 eps^{delta_k} is validated lazily up to the index a run consumes.
struct DeltaSchedule {
  std::vector<double> delta;  // delta[0] = 1
  double c_n = 0.0;
  int m = 1;

  static DeltaSchedule paper_default(int n, int m, int length) {
    if (m < 1) throw std::invalid_argument("DeltaSchedule: m must be >= 1");
    DeltaSchedule s;
    s.c_n = jordan_constant(n);
    s.m = m;
    const double ratio = 2.0 * (m + 2) * s.c_n;
    s.delta.resize(length + 1);
    s.delta[0] = 1.0;
    for (int k = 1; k <= length; ++k) s.delta[k] = s.delta[k - 1] / ratio;
    return s;
  }

  static DeltaSchedule custom(std::vector<double> deltas, int n, int m) {
    if (deltas.empty() || deltas[0] != 1.0)
      throw std::invalid_argument("DeltaSchedule: delta_0 must be 1");
    for (size_t i = 1; i < deltas.size(); ++i)
      if (!(deltas[i] > 0.0) || !(deltas[i] < deltas[i - 1]))
        throw std::invalid_argument("DeltaSchedule: sequence must be positive decreasing");
    DeltaSchedule s;
    s.delta = std::move(deltas);
    s.c_n = jordan_constant(n);
    s.m = m;
    return s;
  }

  double at(int k) const {
    if (k < 0 || k >= static_cast<int>(delta.size()))
      throw std::out_of_range("DeltaSchedule: index beyond schedule length");
    return delta[k];
  }

  int length() const { return static_cast<int>(delta.size()) - 1; }

  /// eps^{delta_1} + ... + eps^{delta_j} <= 2 eps^{delta_j} for all j <= upto.
  bool condition_holds(double eps, int upto) const {
    double sum = 0.0;
    for (int j = 1; j <= upto; ++j) {
      const double term = std::exp(delta[j] * std::log(eps));
      sum += term;
      if (sum > 2.0 * term) return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Thresholded echelonization (iterated)
// ---------------------------------------------------------------------------

struct EchelonizeResult {
  Matrix S;
  Matrix S_inv;
  Matrix A_prime;  // block diagonal, each block reduced column echelon
  Matrix F;        // S^{-1} N S - A_prime
  int k_used = 0;
  std::vector<std::vector<int>> block_levels;  // per input block: r_j of the final staircase
  CheckList checks;
};

namespace detail {

struct BlockState {
  int offset = 0;
  int size = 0;
  EchelonForm ech;
};

inline void re_echelonize(BlockState& b, double rank_tol) {
  b.ech = column_echelon(b.ech.echelon, rank_tol);
}

}  // namespace detail

/// Conjugates a nilpotent block-diagonal matrix to reduced column echelon
/// form plus a perturbation, thresholding pivots below eps^{delta_k} and
/// re-echelonizing until the remaining pivots survive the scaling.
inline EchelonizeResult echelonize_iterate(const Matrix& N, const std::vector<int>& block_dims,
                                           double eps, const DeltaSchedule& schedule,
                                           double rank_tol = 1e-9) {
  const int n = static_cast<int>(N.rows());
  if (N.cols() != n) throw std::invalid_argument("echelonize_iterate: matrix not square");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("echelonize_iterate: eps must lie in (0, 1)");
  if (std::accumulate(block_dims.begin(), block_dims.end(), 0) != n)
    throw std::invalid_argument("echelonize_iterate: block dims do not sum to n");

  EchelonizeResult out;
  const double norm_n = operator_norm(N);
  if (norm_n == 0.0) {
    out.S = Matrix::Identity(n, n);
    out.S_inv = Matrix::Identity(n, n);
    out.A_prime = Matrix::Zero(n, n);
    out.F = Matrix::Zero(n, n);
    out.k_used = 1;
    out.block_levels.assign(block_dims.size(), {});
    for (size_t b = 0; b < block_dims.size(); ++b) out.block_levels[b] = {block_dims[b]};
    return out;
  }

  std::vector<detail::BlockState> blocks;
  Matrix U_acc = Matrix::Identity(n, n);
  Matrix removed = Matrix::Zero(n, n);  // thresholded pivots, current coordinates
  {
    int off = 0;
    for (int dim : block_dims) {
      detail::BlockState b;
      b.offset = off;
      b.size = dim;
      b.ech = column_echelon(N.block(off, off, dim, dim), rank_tol);
      U_acc.block(off, off, dim, dim) = b.ech.basis;
      blocks.push_back(std::move(b));
      off += dim;
    }
  }

  const double log_eps = std::log(eps);
  const int hard_cap = n * n;
  int k = 1;
  while (true) {
    if (k > schedule.length())
      throw HypothesisFailure("echelonize_iterate: schedule exhausted at step " +
                              std::to_string(k));
    const double log_threshold = schedule.at(k) * log_eps;

    bool any_small = false;
    for (const auto& b : blocks)
      for (const auto& p : b.ech.pivots)
        if (std::log(std::abs(p.value)) <= log_threshold) any_small = true;

    if (!any_small) {
      // Scale every block; assemble the result.
      if (k >= 2 && !schedule.condition_holds(eps, k - 1))
        throw HypothesisFailure(
            "echelonize_iterate: schedule violated (summability condition fails at index " +
            std::to_string(k - 1) + " for this eps)");
      const double delta_val = std::exp(log_threshold);
      Matrix scale = Matrix::Identity(n, n);
      Matrix a_prime = Matrix::Zero(n, n);
      for (auto& b : blocks) {
        const ScaledEchelon sc = scale_pivots(b.ech, delta_val);
        out.checks.append(sc.checks);
        for (int i = 0; i < b.size; ++i) scale(b.offset + i, b.offset + i) = sc.scale(i);
        a_prime.block(b.offset, b.offset, b.size, b.size) = sc.reduced;
        out.block_levels.push_back(b.ech.block_dims);
      }
      out.S = U_acc * scale;
      Matrix scale_inv = Matrix::Identity(n, n);
      for (int i = 0; i < n; ++i) scale_inv(i, i) = Complex(1.0, 0.0) / scale(i, i);
      out.S_inv = scale_inv * U_acc.adjoint();
      out.A_prime = a_prime;
      // F is the accumulated removed-pivot matrix transported through the
      // final scaling; S^{-1} N S - (A' + F) is then pure rounding noise.
      out.F = Matrix(n, n);
      for (int i = 0; i < n; ++i)
        for (int jj = 0; jj < n; ++jj) out.F(i, jj) = removed(i, jj) * scale(jj, jj) / scale(i, i);
      out.k_used = k;

      const double log_epow_km1 = schedule.at(k - 1) * log_eps;
      const double log_base = std::log(norm_n + 2.0 * std::exp(log_epow_km1));
      const double log_base_hard = std::max(0.0, log_base);  // max(1, ||A|| + 2 eps^{..})
      const double log_bound_s =
          (n / 2.0) * log_base_hard - (n / 2.0) * schedule.at(k) * log_eps;
      const double log_bound_f =
          std::log(2.0) + n * log_base_hard - n * schedule.at(k) * log_eps + log_epow_km1;
      const double norm_s = std::max(operator_norm(out.S), operator_norm(out.S_inv));
      const double norm_f = operator_norm(out.F);
      out.checks.add(Check::leq_log("echelonize.estimate_of_S", std::log(norm_s), log_bound_s));
      out.checks.add(Check::leq_log("echelonize.estimate_of_S_paper_form", std::log(norm_s),
                                    (n / 2.0) * log_base - (n / 2.0) * schedule.at(k) * log_eps)
                         .as_advisory());
      out.checks.add(Check::leq_log("echelonize.estimate_of_F",
                                    norm_f > 0.0 ? std::log(norm_f)
                                                 : -std::numeric_limits<double>::infinity(),
                                    log_bound_f));
      out.checks.add(Check::leq("echelonize.step_warning_n2_over_2", static_cast<double>(k),
                                n * n / 2.0));
      return out;
    }

    // Threshold the small pivots away and re-echelonize the affected blocks.
    for (auto& b : blocks) {
      bool touched = false;
      for (const auto& p : b.ech.pivots) {
        if (std::log(std::abs(p.value)) <= log_threshold) {
          removed(b.offset + p.row, b.offset + p.col) += p.value;
          b.ech.echelon(p.row, p.col) = Complex(0.0, 0.0);
          touched = true;
        }
      }
      if (touched) {
        detail::re_echelonize(b, rank_tol);
        U_acc.block(b.offset, b.offset, b.size, b.size) =
            (U_acc.block(b.offset, b.offset, b.size, b.size) * b.ech.basis).eval();
        removed.block(b.offset, b.offset, b.size, b.size) =
            (b.ech.basis.adjoint() * removed.block(b.offset, b.offset, b.size, b.size) *
             b.ech.basis)
                .eval();
      }
    }
    ++k;
    if (k > hard_cap)
      throw std::logic_error("echelonize_iterate: failed to converge within n^2 steps");
  }
}

// ---------------------------------------------------------------------------
// Reduced echelon -> Jordan form
// ---------------------------------------------------------------------------

struct JordanizeResult {
  Matrix S;
  Matrix S_inv;
  Matrix J;
  CheckList checks;
};

namespace detail {

/// Levels (r_1, r_2, ...) of a single reduced-echelon block, derived from
/// its pivot pattern. Validates echelon shape and unit pivots.
inline std::vector<int> derive_levels(const Matrix& a, double unit_tol = 1e-12) {
  const int nb = static_cast<int>(a.rows());
  std::vector<int> pivot_row(nb, -1);
  for (int c = 0; c < nb; ++c) {
    for (int r = nb - 1; r >= 0; --r) {
      if (a(r, c) != Complex(0.0, 0.0)) {
        pivot_row[c] = r;
        break;
      }
    }
  }
  int c = 0;
  while (c < nb && pivot_row[c] == -1) ++c;
  const int r1 = c;
  if (r1 == 0 && nb > 0)
    throw std::invalid_argument("reduced_to_jordan: no zero columns (input not nilpotent echelon)");
  std::vector<int> levels{r1};
  // Level group j occupies the columns starting where group j-1's columns
  // did plus its width; its pivot rows start where group j-1's columns start.
  int col_start = r1;
  int row_start = 0;
  while (col_start < nb) {
    int width = 0;
    while (col_start + width < nb && width < levels.back() &&
           pivot_row[col_start + width] == row_start + width) {
      const Complex p = a(row_start + width, col_start + width);
      if (std::abs(p - Complex(1.0, 0.0)) > unit_tol)
        throw std::invalid_argument("reduced_to_jordan: non-unit pivot at column " +
                                    std::to_string(col_start + width));
      ++width;
    }
    if (width == 0 || width > levels.back())
      throw std::invalid_argument("reduced_to_jordan: input not in column echelon form");
    levels.push_back(width);
    row_start = col_start;
    col_start += width;
  }
  return levels;
}

}  // namespace detail

/// Transvection elimination (right-to-left columns, bottom-up within each
/// column) followed by the chain permutation. Exact pivots are preserved; the
/// result J is a 0/1 Jordan matrix built directly from the chain lengths.
inline JordanizeResult reduced_to_jordan(const Matrix& A, const std::vector<int>& block_dims) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw std::invalid_argument("reduced_to_jordan: matrix not square");
  if (std::accumulate(block_dims.begin(), block_dims.end(), 0) != n)
    throw std::invalid_argument("reduced_to_jordan: block dims do not sum to n");

  JordanizeResult out;
  Matrix work = A;
  Matrix S = Matrix::Identity(n, n);
  Matrix S_inv = Matrix::Identity(n, n);

  int off = 0;
  std::vector<std::vector<int>> all_levels;
  for (int dim : block_dims) {
    Matrix blk = work.block(off, off, dim, dim);
    const std::vector<int> levels =
        blk.isZero(0.0) ? std::vector<int>{dim} : detail::derive_levels(blk);
    all_levels.push_back(levels);

    // Snap pivots to exactly 1 so eliminated entries cancel bitwise.
    {
      std::vector<int> offs(levels.size() + 1, 0);
      for (size_t j = 0; j < levels.size(); ++j) offs[j + 1] = offs[j] + levels[j];
      for (size_t j = 1; j < levels.size(); ++j)
        for (int k = 0; k < levels[j]; ++k)
          work(off + offs[j - 1] + k, off + offs[j] + k) = Complex(1.0, 0.0);
    }

    for (int c = dim - 1; c >= 0; --c) {
      const int col = off + c;
      // Pivot row of this column, if any.
      int i0 = -1;
      for (int r = dim - 1; r >= 0; --r)
        if (work(off + r, col) != Complex(0.0, 0.0)) {
          i0 = off + r;
          break;
        }
      if (i0 < 0) continue;
      // Remove entries above the pivot, bottom-up.
      while (true) {
        int k0 = -1;
        for (int r = i0 - 1; r >= off; --r)
          if (work(r, col) != Complex(0.0, 0.0)) {
            k0 = r;
            break;
          }
        if (k0 < 0) break;
        const Complex a = work(k0, col);
        // (I - aM) work (I + aM) with M = E_{k0, i0}.
        work.row(k0) -= a * work.row(i0);
        work.col(i0) += a * work.col(k0);
        S.col(i0) += a * S.col(k0);
        S_inv.row(k0) -= a * S_inv.row(i0);
      }
    }
    off += dim;
  }

  // Chain permutation: position (level j, slot k) -> Jordan chains ordered by
  // decreasing length, per block.
  Matrix P = Matrix::Zero(n, n);
  Matrix J = Matrix::Zero(n, n);
  off = 0;
  int out_pos = 0;
  for (size_t b = 0; b < block_dims.size(); ++b) {
    const std::vector<int>& levels = all_levels[b];
    std::vector<int> offs(levels.size() + 1, 0);
    for (size_t j = 0; j < levels.size(); ++j) offs[j + 1] = offs[j] + levels[j];
    for (int k = 0; k < levels[0]; ++k) {
      int chain_len = 0;
      for (size_t j = 0; j < levels.size(); ++j)
        if (levels[j] > k) chain_len = static_cast<int>(j) + 1;
      for (int j = 0; j < chain_len; ++j) {
        P(off + offs[j] + k, out_pos) = 1.0;
        if (j > 0) J(out_pos - 1, out_pos) = 1.0;
        ++out_pos;
      }
    }
    off += block_dims[b];
  }

  out.S = S * P;
  out.S_inv = P.transpose() * S_inv;
  out.J = J;

  const double norm_a = operator_norm(A);
  const double norm_s = std::max(operator_norm(out.S), operator_norm(out.S_inv));
  const double defect = operator_norm(out.S_inv * A * out.S - J);
  out.checks.add(Check::leq("reduced_to_jordan.exactness", defect,
                            1e-12 * std::max(1.0, norm_a)));
  double log_nfact = 0.0;
  for (int i = 2; i <= n; ++i) log_nfact += std::log(static_cast<double>(i));
  out.checks.add(Check::leq_log("reduced_to_jordan.S_bound", std::log(norm_s),
                                std::exp(log_nfact) * std::log1p(norm_a)));
  return out;
}

// ---------------------------------------------------------------------------
// Jordan normal form with estimates
// ---------------------------------------------------------------------------

struct JordanCertificate {
  Matrix S;
  Matrix S_inv;
  Matrix J;
  Matrix F_residual;  // S^{-1} N S - J
  double bound_S_log10 = 0.0;
  double bound_F_log10 = 0.0;
  double epsilon = 0.0;
  int m = 0;
  int k_used = 0;
  CheckList checks;
};

/// Composition echelonize_iterate then reduced_to_jordan, with the combined
/// bound certificates evaluated in log space (prefactor 1).
inline JordanCertificate nilpotent_jnf(const Matrix& N, const std::vector<int>& block_dims,
                                       double eps, int m,
                                       const DeltaSchedule* custom_schedule = nullptr,
                                       double rank_tol = 1e-9) {
  const int n = static_cast<int>(N.rows());
  if (operator_norm(N) == 0.0)
    throw std::invalid_argument("nilpotent_jnf: zero matrix (already in Jordan form)");
  if (m < 1) throw std::invalid_argument("nilpotent_jnf: m must be >= 1");

  const DeltaSchedule schedule = custom_schedule
                                     ? *custom_schedule
                                     : DeltaSchedule::paper_default(n, m, n * n + 1);

  EchelonizeResult ech = echelonize_iterate(N, block_dims, eps, schedule, rank_tol);
  JordanizeResult jor = reduced_to_jordan(ech.A_prime, block_dims);

  JordanCertificate cert;
  cert.S = ech.S * jor.S;
  cert.S_inv = jor.S_inv * ech.S_inv;
  cert.J = jor.J;
  cert.F_residual = jor.S_inv * ech.F * jor.S;
  cert.epsilon = eps;
  cert.m = m;
  cert.k_used = ech.k_used;
  cert.checks.append(ech.checks);
  cert.checks.append(jor.checks);

  const double log_eps = std::log(eps);
  const double c_n = schedule.c_n;
  const double log_np1 = std::log1p(operator_norm(N));
  const double log_bound_s = c_n * log_np1 - log_eps / (2.0 * (m + 2));
  const double c_prime = (m + 1) * c_n * schedule.at(ech.k_used);
  const double log_bound_f = (m + 1) * c_n * log_np1 + c_prime * log_eps;
  cert.bound_S_log10 = log_bound_s / std::log(10.0);
  cert.bound_F_log10 = log_bound_f / std::log(10.0);

  const double norm_s = std::max(operator_norm(cert.S), operator_norm(cert.S_inv));
  const double norm_f = operator_norm(cert.F_residual);
  cert.checks.add(Check::leq_log("jnf.estim_S", std::log(norm_s), log_bound_s));
  cert.checks.add(Check::leq_log("jnf.estim_F",
                                 norm_f > 0.0 ? m * std::log(norm_s) + std::log(norm_f)
                                              : -std::numeric_limits<double>::infinity(),
                                 log_bound_f));
  cert.checks.add(Check::leq("jnf.identity_residual",
                             operator_norm(cert.S_inv * N * cert.S - cert.J - cert.F_residual),
                             1e-10 * operator_norm(N)));
  return cert;
}

// ---------------------------------------------------------------------------
// Structure comparison and realification
// ---------------------------------------------------------------------------

/// Rank of A^k for k = 1..n; determines the Jordan block sizes of a nilpotent
/// matrix uniquely. The singular-value threshold anchors at tol ||A||^k, the
/// scale the k-th power inherits, so numerically-zero powers resolve to rank 0.
inline std::vector<int> jordan_structure(const Matrix& a, double tol = 1e-9) {
  const int n = static_cast<int>(a.rows());
  const double norm_a = operator_norm(a);
  std::vector<int> ranks;
  Matrix p = a;
  double scale = norm_a;
  for (int k = 1; k <= n; ++k) {
    ranks.push_back(norm_a == 0.0 ? 0 : numerical_rank_abs(p, tol * scale));
    if (k < n) {
      p = p * a;
      scale *= norm_a;
    }
  }
  return ranks;
}

enum class StructureVerdict { GuaranteedEqual, Inconclusive };

struct StructureReport {
  StructureVerdict verdict = StructureVerdict::Inconclusive;
  double epsilon = 0.0;            // ||AC - CB||
  double threshold_log10 = 0.0;    // log10 of 1 / (n n! xi^n)
  std::vector<int> ranks_a;
  std::vector<int> ranks_b;
  bool ranks_equal = false;
};

/// Prop-8.5-style test: if ||AC - CB|| < 1/(n n! xi^n) with ||C^{+-1}|| <= xi
/// then A and B share their Jordan structure. Otherwise fall back to the
/// direct rank comparison.
inline StructureReport same_structure(const Matrix& a, const Matrix& b, const Matrix& c,
                                      double xi, double rank_tol = 1e-9) {
  const int n = static_cast<int>(a.rows());
  if (b.rows() != n || c.rows() != n || a.cols() != n || b.cols() != n || c.cols() != n)
    throw std::invalid_argument("same_structure: dimension mismatch");
  Eigen::FullPivLU<Matrix> lu(c);
  if (!lu.isInvertible()) throw std::invalid_argument("same_structure: singular C");
  const double norm_c = operator_norm(c);
  const double norm_c_inv = operator_norm(lu.inverse().eval());
  if (norm_c > xi * (1.0 + 1e-12) || norm_c_inv > xi * (1.0 + 1e-12))
    throw std::invalid_argument("same_structure: ||C|| or ||C^{-1}|| exceeds xi");

  StructureReport rep;
  rep.epsilon = operator_norm(a * c - c * b);
  double log_nfact = 0.0;
  for (int i = 2; i <= n; ++i) log_nfact += std::log(static_cast<double>(i));
  const double log_threshold = -(std::log(static_cast<double>(n)) + log_nfact +
                                 n * std::log(xi));
  rep.threshold_log10 = log_threshold / std::log(10.0);
  const double log_eps = rep.epsilon > 0.0 ? std::log(rep.epsilon)
                                           : -std::numeric_limits<double>::infinity();
  rep.verdict = (log_eps < log_threshold) ? StructureVerdict::GuaranteedEqual
                                          : StructureVerdict::Inconclusive;
  rep.ranks_a = jordan_structure(a, rank_tol);
  rep.ranks_b = jordan_structure(b, rank_tol);
  rep.ranks_equal = rep.ranks_a == rep.ranks_b;
  return rep;
}

struct RealifyResult {
  Matrix P;      // unitary
  RealMatrix R;  // real Jordan normal form, built exactly
  CheckList checks;
};

namespace detail {

struct JordanBlock {
  int start = 0;
  int size = 0;
  Complex eigenvalue{0.0, 0.0};
};

inline std::vector<JordanBlock> parse_jordan_blocks(const Matrix& j, double tol) {
  const int n = static_cast<int>(j.rows());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (c != r && c != r + 1 && std::abs(j(r, c)) > tol)
        throw std::invalid_argument("realify_jordan: input is not in Jordan form");
  std::vector<JordanBlock> blocks;
  int start = 0;
  for (int i = 0; i < n; ++i) {
    const bool super_one = i + 1 < n && std::abs(j(i, i + 1) - 1.0) <= tol;
    const bool linked = super_one && std::abs(j(i, i) - j(i + 1, i + 1)) <= tol;
    if (i + 1 < n && std::abs(j(i, i + 1)) > tol && !super_one)
      throw std::invalid_argument("realify_jordan: superdiagonal entries must be 0 or 1");
    if (super_one && !linked)
      throw std::invalid_argument("realify_jordan: superdiagonal 1 joins distinct eigenvalues");
    if (!linked) {
      blocks.push_back({start, i - start + 1, j(start, start)});
      start = i + 1;
    }
  }
  return blocks;
}

}  // namespace detail

/// Conjugates a Jordan matrix with conjugation-stable spectrum to real Jordan
/// normal form by a unitary: conjugate block pairs are interleaved and then
/// rotated by diag(C), C = (1/sqrt2) [[1, -i], [1, i]]; real blocks pass
/// through unchanged.
inline RealifyResult realify_jordan(const Matrix& j) {
  const int n = static_cast<int>(j.rows());
  if (j.cols() != n) throw std::invalid_argument("realify_jordan: matrix not square");
  const double tol = 1e-12 * (1.0 + operator_norm(j));
  const auto blocks = detail::parse_jordan_blocks(j, tol);

  RealifyResult out;
  out.P = Matrix::Zero(n, n);
  out.R = RealMatrix::Zero(n, n);

  std::vector<bool> used(blocks.size(), false);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  int pos = 0;

  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    if (used[bi]) continue;
    const auto& blk = blocks[bi];
    if (std::abs(blk.eigenvalue.imag()) <= tol) {
      used[bi] = true;
      for (int t = 0; t < blk.size; ++t) {
        out.P(blk.start + t, pos + t) = 1.0;
        out.R(pos + t, pos + t) = blk.eigenvalue.real();
        if (t > 0) out.R(pos + t - 1, pos + t) = 1.0;
      }
      pos += blk.size;
      continue;
    }
    // Find the matching conjugate block: same size, eigenvalue conj(alpha).
    int partner = -1;
    for (size_t bj = 0; bj < blocks.size(); ++bj) {
      if (bj == bi || used[bj] || blocks[bj].size != blk.size) continue;
      if (std::abs(blocks[bj].eigenvalue - std::conj(blk.eigenvalue)) <= tol) {
        partner = static_cast<int>(bj);
        break;
      }
    }
    if (partner < 0) {
      bool conj_exists = false;
      for (size_t bj = 0; bj < blocks.size(); ++bj)
        if (bj != bi && !used[bj] &&
            std::abs(blocks[bj].eigenvalue - std::conj(blk.eigenvalue)) <= tol)
          conj_exists = true;
      throw std::invalid_argument(conj_exists
                                      ? "realify_jordan: Jordan structures of conjugate "
                                        "eigenvalues do not match"
                                      : "realify_jordan: spectrum not closed under conjugation");
    }
    used[bi] = true;
    used[partner] = true;
    const auto& blk2 = blocks[partner];
    const double re = blk.eigenvalue.real();
    const double im = blk.eigenvalue.imag();
    for (int t = 0; t < blk.size; ++t) {
      // Interleave then rotate: columns (e_a + e_b)/sqrt2 and (-i e_a + i e_b)/sqrt2.
      out.P(blk.start + t, pos + 2 * t) = inv_sqrt2;
      out.P(blk2.start + t, pos + 2 * t) = inv_sqrt2;
      out.P(blk.start + t, pos + 2 * t + 1) = Complex(0.0, -inv_sqrt2);
      out.P(blk2.start + t, pos + 2 * t + 1) = Complex(0.0, inv_sqrt2);
      out.R(pos + 2 * t, pos + 2 * t) = re;
      out.R(pos + 2 * t, pos + 2 * t + 1) = im;
      out.R(pos + 2 * t + 1, pos + 2 * t) = -im;
      out.R(pos + 2 * t + 1, pos + 2 * t + 1) = re;
      if (t > 0) {
        out.R(pos + 2 * t - 2, pos + 2 * t) = 1.0;
        out.R(pos + 2 * t - 1, pos + 2 * t + 1) = 1.0;
      }
    }
    pos += 2 * blk.size;
  }

  const double defect = operator_norm(out.P.adjoint() * j * out.P - out.R.cast<Complex>());
  out.checks.add(Check::leq("realify_jordan.residual", defect, 1e-12 * (1.0 + operator_norm(j))));
  return out;
}

/// Predicate: nonzero entries only on the diagonal (constant per block) and
/// first superdiagonal with values in {0, 1}, forming a valid block pattern.
inline bool is_jordan_form(const Matrix& j, double tol = 0.0) {
  const int n = static_cast<int>(j.rows());
  if (j.cols() != n) return false;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c == r) continue;
      if (c == r + 1) {
        const Complex e = j(r, c);
        const bool zero = std::abs(e) <= tol;
        const bool one = std::abs(e - 1.0) <= tol;
        if (!zero && !one) return false;
        if (one && std::abs(j(r, r) - j(c, c)) > tol) return false;
      } else if (std::abs(j(r, c)) > tol) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace qpr::jordan
