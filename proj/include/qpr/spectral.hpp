#pragma once

// Spectrum clustering and block decoupling: Gamma-separation of eigenvalue
// sets, Schur triangularization with cluster reordering, Sylvester
// back-substitution to zero the coupling blocks, and the reduction of a
// block-diagonal matrix to single-eigenvalue blocks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "qpr/certificates.hpp"
#include "qpr/matrixutil.hpp"

namespace qpr::spectral {

// ---------------------------------------------------------------------------
// Gamma clusters
// ---------------------------------------------------------------------------

struct ClusterPartition {
  std::vector<std::vector<int>> clusters;  // indices into the input multiset
  double gamma = 0.0;
};

/// Connected components of the graph on eigenvalues with edges |a - b| <= Gamma.
/// Clusters are ordered by the (Re, Im)-lexicographic minimum of their members;
/// members are sorted the same way.
inline ClusterPartition gamma_clusters(const std::vector<Complex>& spectrum, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma_clusters: gamma must be positive");
  if (spectrum.empty()) throw std::invalid_argument("gamma_clusters: empty spectrum");
  const int n = static_cast<int>(spectrum.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(spectrum[i] - spectrum[j]) <= gamma) parent[find(i)] = find(j);

  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);

  ClusterPartition part;
  part.gamma = gamma;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      return lex_less(spectrum[a], spectrum[b]);
    });
    part.clusters.push_back(members);
  }
  std::sort(part.clusters.begin(), part.clusters.end(),
            [&](const std::vector<int>& a, const std::vector<int>& b) {
              return lex_less(spectrum[a.front()], spectrum[b.front()]);
            });
  return part;
}

/// True iff the set cannot be split into two Gamma-separated halves;
/// equivalently its Gamma-cluster graph is connected.
inline bool gamma_connected(const std::vector<Complex>& values, double gamma) {
  if (values.empty()) return true;
  return gamma_clusters(values, gamma).clusters.size() == 1;
}

// ---------------------------------------------------------------------------
// Sylvester back-substitution for upper-triangular splits
// ---------------------------------------------------------------------------

/// Solves T1 R - R T4 = -T2 for the top-right coupling block of an upper
/// triangular T = [[T1, T2], [0, T4]], by back-substitution in the order
/// (i from n1 down, j from 1 up). Every divisor T1(i,i) - T4(j,j) must stay
/// >= Gamma in magnitude.
inline Matrix decouple_blocks(const Matrix& t, int split, double gamma,
                              CheckList* log = nullptr) {
  const int n = static_cast<int>(t.rows());
  if (split <= 0 || split >= n) throw std::invalid_argument("decouple_blocks: bad split index");
  const int n1 = split;
  const int n2 = n - split;
  const auto t1 = t.topLeftCorner(n1, n1);
  const auto t2 = t.topRightCorner(n1, n2);
  const auto t4 = t.bottomRightCorner(n2, n2);

  Matrix r = Matrix::Zero(n1, n2);
  double min_divisor = std::numeric_limits<double>::infinity();
  for (int i = n1 - 1; i >= 0; --i) {
    for (int j = 0; j < n2; ++j) {
      Complex rhs = -t2(i, j);
      for (int k = i + 1; k < n1; ++k) rhs -= t1(i, k) * r(k, j);
      for (int l = 0; l < j; ++l) rhs += r(i, l) * t4(l, j);
      const Complex divisor = t1(i, i) - t4(j, j);
      min_divisor = std::min(min_divisor, std::abs(divisor));
      if (std::abs(divisor) < gamma)
        throw CertificateFailure("decouple_blocks: divisor |T1(" + std::to_string(i) + "," +
                                 std::to_string(i) + ") - T4(" + std::to_string(j) + "," +
                                 std::to_string(j) + ")| = " + std::to_string(std::abs(divisor)) +
                                 " below Gamma");
      r(i, j) = rhs / divisor;
    }
  }
  if (log) {
    log->add(Check::leq("decouple.min_divisor_ge_gamma", gamma, min_divisor));
    const double entry_max = r.cwiseAbs().maxCoeff();
    const double log_bound = std::log(static_cast<double>(n1) * n2) +
                             (static_cast<double>(n1) * n2) *
                                 (std::log(operator_norm(t)) - 2.0 * std::log(gamma));
    log->add(Check::leq_log("decouple.entry_bound_paper_form",
                            entry_max > 0.0 ? std::log(entry_max)
                                            : -std::numeric_limits<double>::infinity(),
                            log_bound)
                 .as_advisory());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Full spectrum separation
// ---------------------------------------------------------------------------

struct BlockDecoupling {
  Matrix M;
  Matrix M_inv;
  Matrix D;                       // block diagonal, blocks upper triangular
  std::vector<int> block_dims;    // cluster sizes, in cluster order
  std::vector<std::vector<Complex>> cluster_spectra;
  double residual = 0.0;          // ||M^{-1} B M - D||
  CheckList checks;
};

namespace detail {

/// Unitary swap of adjacent diagonal entries of an upper triangular matrix:
/// columns (i, i+1) are rotated so the eigenvalues exchange places.
inline void swap_adjacent(Matrix& t, Matrix& q, int i) {
  const Complex a = t(i, i);
  const Complex b = t(i + 1, i + 1);
  const Complex c = t(i, i + 1);
  // Eigenvector of [[a, c], [0, b]] for eigenvalue b: (c, b - a).
  Complex v0 = c;
  Complex v1 = b - a;
  const double norm = std::sqrt(std::norm(v0) + std::norm(v1));
  Matrix g = Matrix::Identity(t.rows(), t.cols());
  if (norm == 0.0) return;  // equal eigenvalues with zero coupling: nothing to do
  v0 /= norm;
  v1 /= norm;
  g(i, i) = v0;
  g(i + 1, i) = v1;
  g(i, i + 1) = -std::conj(v1);
  g(i + 1, i + 1) = std::conj(v0);
  t = (g.adjoint() * t * g).eval();
  q = (q * g).eval();
  // Clean the structural zeros the rotation touched.
  t(i + 1, i) = Complex(0.0, 0.0);
  for (int r = i + 2; r < t.rows(); ++r) {
    t(r, i) = Complex(0.0, 0.0);
    t(r, i + 1) = Complex(0.0, 0.0);
  }
  t(i, i) = b;
  t(i + 1, i + 1) = a;
}

}  // namespace detail

/// Schur triangularization, cluster-contiguous eigenvalue reordering, then
/// iterated decoupling peeling one Gamma-cluster at a time. D's off-diagonal
/// blocks are exactly zero by construction.
inline BlockDecoupling separate_spectrum(const Matrix& b, double gamma) {
  const int n = static_cast<int>(b.rows());
  if (b.cols() != n) throw std::invalid_argument("separate_spectrum: matrix not square");
  if (!(gamma > 0.0)) throw std::invalid_argument("separate_spectrum: gamma must be positive");

  BlockDecoupling out;
  Eigen::ComplexSchur<Matrix> schur(b, true);
  Matrix t = schur.matrixT();
  Matrix q = schur.matrixU();

  // Target cluster id per diagonal position, then bubble into contiguity.
  std::vector<Complex> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = t(i, i);
  const ClusterPartition clusters = gamma_clusters(eigs, gamma);
  std::vector<int> cluster_of(n, -1);
  for (size_t c = 0; c < clusters.clusters.size(); ++c)
    for (int idx : clusters.clusters[c]) cluster_of[idx] = static_cast<int>(c);

  std::vector<int> order(cluster_of);  // cluster id at each position, mutated by swaps
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (int i = 0; i + 1 < n; ++i) {
      if (order[i] > order[i + 1]) {
        detail::swap_adjacent(t, q, i);
        std::swap(order[i], order[i + 1]);
        swapped = true;
      }
    }
  }

  std::vector<int> dims(clusters.clusters.size(), 0);
  for (int c : order) ++dims[c];
  out.block_dims = dims;

  // Peel clusters left to right with Sylvester solves.
  Matrix m_right = Matrix::Identity(n, n);
  Matrix m_right_inv = Matrix::Identity(n, n);
  int off = 0;
  for (size_t c = 0; c + 1 < dims.size(); ++c) {
    const int n1 = dims[c];
    const int rest = n - off - n1;
    const Matrix sub = t.block(off, off, n1 + rest, n1 + rest);
    const Matrix r = decouple_blocks(sub, n1, gamma, &out.checks);
    Matrix m = Matrix::Identity(n, n);
    Matrix m_inv = Matrix::Identity(n, n);
    m.block(off, off + n1, n1, rest) = r;
    m_inv.block(off, off + n1, n1, rest) = -r;
    // M^{-1} T M zeroes the coupling block of this split exactly.
    t = (m_inv * t * m).eval();
    t.block(off, off + n1, n1, rest).setZero();
    m_right = (m_right * m).eval();
    m_right_inv = (m_inv * m_right_inv).eval();
    off += n1;
  }

  out.M = q * m_right;
  out.M_inv = m_right_inv * q.adjoint();
  out.D = t;
  // Zero below-diagonal dust so blocks are exactly upper triangular.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) out.D(i, j) = Complex(0.0, 0.0);

  off = 0;
  for (int dim : dims) {
    std::vector<Complex> spec;
    for (int i = 0; i < dim; ++i) spec.push_back(out.D(off + i, off + i));
    out.cluster_spectra.push_back(spec);
    off += dim;
  }

  out.residual = operator_norm(out.M_inv * b * out.M - out.D);
  const double norm_b = operator_norm(b);
  out.checks.add(Check::leq("separate.residual", out.residual, 1e-10 * norm_b));
  const double norm_m = std::max(operator_norm(out.M), operator_norm(out.M_inv));
  const double log_paper = 3.0 * n * std::log(static_cast<double>(n)) +
                           (static_cast<double>(n) * n * n) *
                               (std::log(norm_b) - 2.0 * std::log(gamma));
  out.checks.add(
      Check::leq_log("separate.M_bound_paper_form", std::log(norm_m), log_paper).as_advisory());
  // The diagonal blocks of D are compressions of the Schur factor, so
  // ||D|| <= ||B|| up to the eigenvalue forcing in the swaps.
  out.checks.add(Check::leq("separate.D_norm", operator_norm(out.D),
                            norm_b * (1.0 + 1e-10) + 1e-14));
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive separation
// ---------------------------------------------------------------------------

struct AdaptiveSeparation {
  BlockDecoupling decoupling;
  int d0 = 0;  // gammas[d0] certifies block connectivity; gammas[d0-1] was used
};

/// Iterates separate_spectrum over a decreasing Gamma sequence until every
/// block's spectrum is connected at the next level.
inline AdaptiveSeparation adaptive_separation(const Matrix& a, const std::vector<double>& gammas) {
  if (gammas.size() < 2)
    throw std::invalid_argument("adaptive_separation: need at least two gammas");
  for (size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] < gammas[i - 1]) || !(gammas[i] > 0.0))
      throw std::invalid_argument("adaptive_separation: gammas must be strictly decreasing positive");

  for (size_t i = 0; i + 1 < gammas.size(); ++i) {
    BlockDecoupling dec = separate_spectrum(a, gammas[i]);
    bool stable = true;
    for (const auto& spec : dec.cluster_spectra)
      if (!gamma_connected(spec, gammas[i + 1])) stable = false;
    if (stable) {
      AdaptiveSeparation out;
      out.decoupling = std::move(dec);
      out.d0 = static_cast<int>(i) + 1;
      return out;
    }
  }
  throw HypothesisFailure("adaptive_separation: gamma sequence exhausted before stabilization");
}

// ---------------------------------------------------------------------------
// Single-eigenvalue blocks
// ---------------------------------------------------------------------------

struct SingleEigenvalueSplit {
  Matrix B_hat;                      // block diagonal, one eigenvalue per block
  Matrix F_hat;                      // diagonal remainder; B_hat + F_hat = D bitwise
  std::vector<Complex> representatives;  // exact mean eigenvalue per block
  CheckList checks;
};

/// Replaces each diagonal block's diagonal by the mean of its entries, the
/// difference going to a diagonal F_hat with ||F_hat|| <= n * threshold.
inline SingleEigenvalueSplit to_single_eigenvalue_blocks(const Matrix& d,
                                                         const std::vector<int>& block_dims,
                                                         double threshold) {
  const int n = static_cast<int>(d.rows());
  if (std::accumulate(block_dims.begin(), block_dims.end(), 0) != n)
    throw std::invalid_argument("to_single_eigenvalue_blocks: block dims do not sum to n");

  SingleEigenvalueSplit out;
  out.F_hat = Matrix::Zero(n, n);
  int off = 0;
  double max_shift = 0.0;
  for (int dim : block_dims) {
    Complex mean(0.0, 0.0);
    for (int i = 0; i < dim; ++i) mean += d(off + i, off + i);
    mean /= static_cast<double>(dim);
    double spread = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        spread = std::max(spread, std::abs(d(off + i, off + i) - d(off + j, off + j)));
    if (spread > n * threshold)
      throw HypothesisFailure("to_single_eigenvalue_blocks: intra-block spread " +
                              std::to_string(spread) + " exceeds n * threshold = " +
                              std::to_string(n * threshold));
    for (int i = 0; i < dim; ++i) {
      out.F_hat(off + i, off + i) = d(off + i, off + i) - mean;
      max_shift = std::max(max_shift, std::abs(out.F_hat(off + i, off + i)));
    }
    out.representatives.push_back(mean);
    off += dim;
  }
  out.B_hat = d - out.F_hat;  // exact: B_hat + F_hat = D bitwise
  out.checks.add(Check::leq("single_eig.F_hat_bound", max_shift,
                            static_cast<double>(n) * threshold));
  return out;
}

}  // namespace qpr::spectral
