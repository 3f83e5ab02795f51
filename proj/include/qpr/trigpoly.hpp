#pragma once

// Matrix-valued trigonometric polynomials on T^d: a finite map from lattice
// modes k in Z^d to complex n x n coefficient matrices. All operations are
// pure; coefficient maps are ordered (std::map over the lexicographic order
// on Z^d) so iteration and hence floating-point reduction order is
// deterministic and results are bit-stable across runs.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qpr/certificates.hpp"
#include "qpr/frequency.hpp"
#include "qpr/matrixutil.hpp"

namespace qpr::harmonics {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class TrigPoly {
 public:
  using ModeMap = std::map<LatticeVector, Matrix>;

  TrigPoly() : d_(1), n_(1) {}  // trivial zero polynomial on T^1

  TrigPoly(int d, int n) : d_(d), n_(n) {
    if (d < 1 || n < 1) throw std::invalid_argument("TrigPoly: d and n must be >= 1");
  }

  static TrigPoly zero(int d, int n) { return TrigPoly(d, n); }

  static TrigPoly constant(int d, const Matrix& m) {
    TrigPoly p(d, static_cast<int>(m.rows()));
    if (m.rows() != m.cols()) throw std::invalid_argument("TrigPoly::constant: not square");
    p.set_mode(LatticeVector(d, 0), m);
    return p;
  }

  static TrigPoly identity(int d, int n) {
    return constant(d, Matrix::Identity(n, n));
  }

  static TrigPoly single_mode(int d, const LatticeVector& k, const Matrix& m) {
    TrigPoly p(d, static_cast<int>(m.rows()));
    if (m.rows() != m.cols()) throw std::invalid_argument("TrigPoly::single_mode: not square");
    if (static_cast<int>(k.size()) != d)
      throw std::invalid_argument("TrigPoly::single_mode: bad mode dimension");
    p.set_mode(k, m);
    return p;
  }

  int torus_dimension() const { return d_; }
  int matrix_dimension() const { return n_; }
  const ModeMap& modes() const { return modes_; }
  bool is_zero() const { return modes_.empty(); }

  /// Max |k|_1 over stored nonzero modes; 0 for the zero polynomial.
  int degree() const {
    int deg = 0;
    for (const auto& [k, m] : modes_) deg = std::max(deg, l1_norm(k));
    return deg;
  }

  Matrix coefficient(const LatticeVector& k) const {
    auto it = modes_.find(k);
    if (it == modes_.end()) return Matrix::Zero(n_, n_);
    return it->second;
  }

  bool has_mode(const LatticeVector& k) const { return modes_.count(k) != 0; }

  /// Stores a coefficient; exact-zero matrices are dropped (absent = zero).
  void set_mode(const LatticeVector& k, const Matrix& m) {
    if (static_cast<int>(k.size()) != d_)
      throw std::invalid_argument("TrigPoly::set_mode: bad mode dimension");
    if (m.rows() != n_ || m.cols() != n_)
      throw std::invalid_argument("TrigPoly::set_mode: bad coefficient shape");
    if (m.isZero(0.0))
      modes_.erase(k);
    else
      modes_[k] = m;
  }

  void add_to_mode(const LatticeVector& k, const Matrix& m) {
    auto it = modes_.find(k);
    if (it == modes_.end()) {
      set_mode(k, m);
    } else {
      it->second += m;
      if (it->second.isZero(0.0)) modes_.erase(it);
    }
  }

  /// Pointwise value sum_k coef(k) e^{2 i pi <k, theta>}.
  Matrix eval(const std::vector<double>& theta) const {
    if (static_cast<int>(theta.size()) != d_)
      throw std::invalid_argument("TrigPoly::eval: bad theta dimension");
    Matrix v = Matrix::Zero(n_, n_);
    for (const auto& [k, m] : modes_) {
      double phase = 0.0;
      for (int i = 0; i < d_; ++i) phase += k[i] * theta[i];
      v += std::polar(1.0, kTwoPi * phase) * m;
    }
    return v;
  }

  TrigPoly operator+(const TrigPoly& o) const {
    check_same_shape(o, "operator+");
    TrigPoly r(*this);
    for (const auto& [k, m] : o.modes_) r.add_to_mode(k, m);
    return r;
  }

  TrigPoly operator-(const TrigPoly& o) const {
    check_same_shape(o, "operator-");
    TrigPoly r(*this);
    for (const auto& [k, m] : o.modes_) r.add_to_mode(k, -m);
    return r;
  }

  TrigPoly operator-() const {
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) r.modes_[k] = -m;
    return r;
  }

  friend TrigPoly operator*(const Complex& c, const TrigPoly& p) {
    TrigPoly r(p.d_, p.n_);
    if (c == Complex(0.0, 0.0)) return r;
    for (const auto& [k, m] : p.modes_) r.modes_[k] = c * m;
    return r;
  }

  friend TrigPoly operator*(double c, const TrigPoly& p) { return Complex(c, 0.0) * p; }

  /// Fourier convolution. Degree of the result is at most deg P + deg Q.
  TrigPoly operator*(const TrigPoly& o) const {
    check_same_shape(o, "multiply");
    TrigPoly r(d_, n_);
    for (const auto& [ka, ma] : modes_) {
      for (const auto& [kb, mb] : o.modes_) {
        LatticeVector k(d_);
        for (int i = 0; i < d_; ++i) k[i] = ka[i] + kb[i];
        r.add_to_mode(k, ma * mb);
      }
    }
    return r;
  }

  /// Right-multiplication by a constant matrix.
  TrigPoly mul_const(const Matrix& c) const {
    if (c.rows() != n_ || c.cols() != n_)
      throw std::invalid_argument("TrigPoly::mul_const: shape mismatch");
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) r.set_mode(k, m * c);
    return r;
  }

  /// Left-multiplication by a constant matrix.
  TrigPoly const_mul(const Matrix& c) const {
    if (c.rows() != n_ || c.cols() != n_)
      throw std::invalid_argument("TrigPoly::const_mul: shape mismatch");
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) r.set_mode(k, c * m);
    return r;
  }

  /// Complex conjugate of the function: modes conj(coef(-k)) at k.
  TrigPoly conjugated() const {
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) {
      LatticeVector nk(d_);
      for (int i = 0; i < d_; ++i) nk[i] = -k[i];
      r.modes_[nk] = m.conjugate();
    }
    return r;
  }

  TrigPoly transposed() const {
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) r.modes_[k] = m.transpose();
    return r;
  }

  /// Exact real part at coefficient level: (P + conj(P)) / 2.
  TrigPoly real_part() const {
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) {
      LatticeVector nk(d_);
      for (int i = 0; i < d_; ++i) nk[i] = -k[i];
      r.set_mode(k, 0.5 * (m + coefficient(nk).conjugate()));
    }
    return r;
  }

  /// Exact imaginary part at coefficient level: (P - conj(P)) / (2i).
  TrigPoly imag_part() const {
    TrigPoly r(d_, n_);
    const Complex half_over_i(0.0, -0.5);
    for (const auto& [k, m] : modes_) {
      LatticeVector nk(d_);
      for (int i = 0; i < d_; ++i) nk[i] = -k[i];
      r.set_mode(k, half_over_i * (m - coefficient(nk).conjugate()));
    }
    return r;
  }

  /// Real-valuedness predicate: coef(-k) == conj(coef(k)) for all k,
  /// entrywise within tol (tol = 0 demands bit equality).
  bool is_real(double tol = 0.0) const {
    for (const auto& [k, m] : modes_) {
      LatticeVector nk(d_);
      for (int i = 0; i < d_; ++i) nk[i] = -k[i];
      const Matrix other = coefficient(nk).conjugate();
      if (tol == 0.0) {
        if (m != other) return false;
      } else if ((m - other).cwiseAbs().maxCoeff() > tol) {
        return false;
      }
    }
    return true;
  }

  /// Exact projection onto real-valued polynomials. The (k, -k) pair is
  /// symmetrized with identical arithmetic on both sides so the predicate
  /// is_real(0) holds bitwise on the result.
  TrigPoly symmetrized_real() const {
    TrigPoly r(d_, n_);
    for (const auto& [k, m] : modes_) {
      LatticeVector nk(d_);
      for (int i = 0; i < d_; ++i) nk[i] = -k[i];
      if (r.has_mode(k) || r.has_mode(nk)) continue;
      const Matrix avg = 0.5 * (m + coefficient(nk).conjugate());
      if (k == nk) {
        r.set_mode(k, 0.5 * (avg + avg.conjugate()));  // k = 0: force real entries
      } else {
        r.set_mode(k, avg);
        r.set_mode(nk, avg.conjugate());
      }
    }
    return r;
  }

  /// Entrywise trace as a scalar (1 x 1) polynomial.
  TrigPoly trace() const {
    TrigPoly r(d_, 1);
    for (const auto& [k, m] : modes_) {
      Matrix t(1, 1);
      t(0, 0) = m.trace();
      r.set_mode(k, t);
    }
    return r;
  }

  /// Determinant as a scalar polynomial, by cofactor expansion along the
  /// first row with exact coefficient convolutions. Intended for small n.
  TrigPoly determinant() const {
    if (n_ == 1) return *this;
    TrigPoly det = TrigPoly::zero(d_, 1);
    for (int j = 0; j < n_; ++j) {
      TrigPoly entry = submatrix_entry(0, j);
      TrigPoly minor_det = minor_poly(0, j).determinant();
      TrigPoly term = entry * minor_det;
      det = (j % 2 == 0) ? det + term : det - term;
    }
    return det;
  }

  /// The (i, j) entry as a scalar polynomial.
  TrigPoly submatrix_entry(int i, int j) const {
    TrigPoly r(d_, 1);
    for (const auto& [k, m] : modes_) {
      Matrix e(1, 1);
      e(0, 0) = m(i, j);
      r.set_mode(k, e);
    }
    return r;
  }

  /// Polynomial made of the minor obtained by deleting row i and column j.
  TrigPoly minor_poly(int i, int j) const {
    if (n_ < 2) throw std::invalid_argument("minor_poly: n must be >= 2");
    TrigPoly r(d_, n_ - 1);
    for (const auto& [k, m] : modes_) {
      Matrix sub(n_ - 1, n_ - 1);
      for (int r_ = 0, rr = 0; r_ < n_; ++r_) {
        if (r_ == i) continue;
        for (int c = 0, cc = 0; c < n_; ++c) {
          if (c == j) continue;
          sub(rr, cc) = m(r_, c);
          ++cc;
        }
        ++rr;
      }
      r.set_mode(k, sub);
    }
    return r;
  }

  /// Adjugate (transpose of cofactors) as a matrix polynomial; P * adj(P)
  /// equals det(P) * I at coefficient level. Small n only.
  TrigPoly adjugate_poly() const {
    if (n_ == 1) return TrigPoly::identity(d_, 1);
    TrigPoly adj = TrigPoly::zero(d_, n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        TrigPoly cof = minor_poly(i, j).determinant();
        const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
        for (const auto& [k, m] : cof.modes()) {
          Matrix add = Matrix::Zero(n_, n_);
          add(j, i) = sign * m(0, 0);
          adj.add_to_mode(k, add);
        }
      }
    }
    return adj;
  }

  /// Drops modes whose coefficient norm is <= tol. Modes are dropped in
  /// (k, -k) pairs only, so exact real-symmetry survives pruning. Returns the
  /// total operator-norm mass removed (an upper bound on the C^0 change).
  TrigPoly pruned(double tol, double* dropped_mass = nullptr) const {
    TrigPoly r(d_, n_);
    double dropped = 0.0;
    for (const auto& [k, m] : modes_) {
      LatticeVector nk(d_);
      for (int i = 0; i < d_; ++i) nk[i] = -k[i];
      const double self = operator_norm(m);
      const double mirror = has_mode(nk) ? operator_norm(coefficient(nk)) : 0.0;
      if (self <= tol && mirror <= tol) {
        dropped += self;
      } else {
        r.modes_[k] = m;
      }
    }
    if (dropped_mass) *dropped_mass = dropped;
    return r;
  }

  bool operator==(const TrigPoly& o) const {
    if (d_ != o.d_ || n_ != o.n_ || modes_.size() != o.modes_.size()) return false;
    auto it = modes_.begin();
    auto jt = o.modes_.begin();
    for (; it != modes_.end(); ++it, ++jt) {
      if (it->first != jt->first || it->second != jt->second) return false;
    }
    return true;
  }

 private:
  void check_same_shape(const TrigPoly& o, const char* op) const {
    if (d_ != o.d_ || n_ != o.n_)
      throw std::invalid_argument(std::string("TrigPoly::") + op + ": dimension mismatch");
  }

  int d_;
  int n_;
  ModeMap modes_;
};

/// d/dt P(theta + t omega) at t = 0: mode k becomes 2 i pi <k, omega> coef(k).
inline TrigPoly directional_derivative(const TrigPoly& p, const FrequencyVector& omega) {
  if (p.torus_dimension() != omega.dimension())
    throw std::invalid_argument("directional_derivative: dimension mismatch");
  TrigPoly r(p.torus_dimension(), p.matrix_dimension());
  for (const auto& [k, m] : p.modes()) {
    const Complex factor(0.0, kTwoPi * omega.pairing(k));
    if (factor != Complex(0.0, 0.0)) r.set_mode(k, factor * m);
  }
  return r;
}

inline TrigPoly multiply(const TrigPoly& p, const TrigPoly& q) { return p * q; }

/// Drops all modes with |k|_1 > N; kept coefficients are bit-identical.
inline TrigPoly truncate(const TrigPoly& p, int N) {
  if (N < 0) throw std::invalid_argument("truncate: N must be >= 0");
  TrigPoly r(p.torus_dimension(), p.matrix_dimension());
  for (const auto& [k, m] : p.modes())
    if (l1_norm(k) <= N) r.set_mode(k, m);
  return r;
}

/// theta -> P(2 theta): mode k moves to 2k.
inline TrigPoly double_angle(const TrigPoly& p) {
  TrigPoly r(p.torus_dimension(), p.matrix_dimension());
  for (const auto& [k, m] : p.modes()) {
    LatticeVector k2(k);
    for (int& c : k2) c *= 2;
    r.set_mode(k2, m);
  }
  return r;
}

enum class NormMethod { FourierBound, GridSup };

/// Number of grid points per dimension used by grid-sup evaluations:
/// 4 * degree + 1, at least 16 (spec default).
inline int default_grid(const TrigPoly& p, int override_grid = 0) {
  if (override_grid > 0) return override_grid;
  return std::max(16, 4 * p.degree() + 1);
}

namespace detail {

/// Visits all multi-indices alpha in N^d with |alpha|_1 <= r.
template <typename F>
void for_each_multi_index(int d, int r, F&& f) {
  std::vector<int> alpha(d, 0);
  while (true) {
    int s = 0;
    for (int a : alpha) s += a;
    if (s <= r) f(alpha);
    int i = d - 1;
    while (i >= 0 && alpha[i] == r) {
      alpha[i] = 0;
      --i;
    }
    if (i < 0) break;
    ++alpha[i];
  }
}

/// Partial derivative d^alpha: mode k multiplied by prod_l (2 i pi k_l)^{alpha_l}.
inline TrigPoly partial_derivative(const TrigPoly& p, const std::vector<int>& alpha) {
  TrigPoly r(p.torus_dimension(), p.matrix_dimension());
  for (const auto& [k, m] : p.modes()) {
    Complex factor(1.0, 0.0);
    for (size_t l = 0; l < alpha.size(); ++l)
      for (int t = 0; t < alpha[l]; ++t) factor *= Complex(0.0, kTwoPi * k[l]);
    if (factor != Complex(0.0, 0.0)) r.set_mode(k, factor * m);
  }
  return r;
}

/// Uniform grid theta_j = j / G per dimension; visits every grid point.
template <typename F>
void for_each_grid_point(int d, int grid, F&& f) {
  std::vector<int> idx(d, 0);
  std::vector<double> theta(d, 0.0);
  while (true) {
    for (int i = 0; i < d; ++i) theta[i] = static_cast<double>(idx[i]) / grid;
    f(theta);
    int i = d - 1;
    while (i >= 0 && idx[i] == grid - 1) {
      idx[i] = 0;
      --i;
    }
    if (i < 0) break;
    ++idx[i];
  }
}

/// Values of P at every point of the uniform grid theta_j = (j + offset)/G
/// per dimension, row-major with axis 0 outermost. Separable synthesis, so
/// the cost is O(d * K * G * #data) instead of O(#modes * #points).
inline std::vector<Matrix> eval_on_grid(const TrigPoly& p, int grid, double offset = 0.0);

/// Separable DFT of grid samples (row-major, axis 0 outermost): returns the
/// coefficients on the box |k_l| <= out_degree, normalized by grid^d. One
/// axis is transformed at a time, so the cost is O(d * K * grid * #data)
/// rather than O(#modes * #points).
inline std::vector<Matrix> separable_dft(int d, int n, int grid, int out_degree,
                                         std::vector<Matrix> data) {
  const int K = 2 * out_degree + 1;
  std::vector<Complex> twiddle(static_cast<size_t>(K) * grid);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < grid; ++j)
      twiddle[static_cast<size_t>(k) * grid + j] =
          std::polar(1.0, -kTwoPi * (k - out_degree) * j / static_cast<double>(grid));

  std::vector<long> extent(d, grid);
  for (int axis = d - 1; axis >= 0; --axis) {
    long stride = 1;
    for (int aa = axis + 1; aa < d; ++aa) stride *= extent[aa];
    long outer = 1;
    for (int aa = 0; aa < axis; ++aa) outer *= extent[aa];
    std::vector<Matrix> next(static_cast<size_t>(outer) * K * stride);
    for (long o = 0; o < outer; ++o) {
      for (int k = 0; k < K; ++k) {
        for (long s = 0; s < stride; ++s) {
          Matrix acc = Matrix::Zero(n, n);
          const Complex* tw = &twiddle[static_cast<size_t>(k) * grid];
          for (int j = 0; j < grid; ++j)
            acc += tw[j] * data[(o * grid + j) * stride + s];
          next[(o * K + k) * stride + s] = std::move(acc);
        }
      }
    }
    data = std::move(next);
    extent[axis] = K;
  }
  const double total = std::pow(static_cast<double>(grid), d);
  for (auto& m : data) m /= total;
  return data;  // K^d entries, index l = sum (k_l + out_degree) * K^{d-1-l}
}

inline std::vector<Matrix> eval_on_grid(const TrigPoly& p, int grid, double offset) {
  const int d = p.torus_dimension();
  const int n = p.matrix_dimension();
  const int deg = p.degree();
  const int K = 2 * deg + 1;

  // Coefficients laid out on the box |k_l| <= deg.
  size_t box = 1;
  for (int i = 0; i < d; ++i) box *= K;
  std::vector<Matrix> data(box, Matrix::Zero(n, n));
  for (const auto& [k, m] : p.modes()) {
    size_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * K + (k[i] + deg);
    data[idx] = m;
  }

  std::vector<Complex> twiddle(static_cast<size_t>(grid) * K);
  for (int j = 0; j < grid; ++j)
    for (int k = 0; k < K; ++k)
      twiddle[static_cast<size_t>(j) * K + k] = std::polar(
          1.0, kTwoPi * (k - deg) * (j + offset) / static_cast<double>(grid));

  std::vector<long> extent(d, K);
  for (int axis = d - 1; axis >= 0; --axis) {
    long stride = 1;
    for (int aa = axis + 1; aa < d; ++aa) stride *= extent[aa];
    long outer = 1;
    for (int aa = 0; aa < axis; ++aa) outer *= extent[aa];
    std::vector<Matrix> next(static_cast<size_t>(outer) * grid * stride);
    for (long o = 0; o < outer; ++o) {
      for (int j = 0; j < grid; ++j) {
        const Complex* tw = &twiddle[static_cast<size_t>(j) * K];
        for (long s = 0; s < stride; ++s) {
          Matrix acc = Matrix::Zero(n, n);
          for (int k = 0; k < K; ++k) acc += tw[k] * data[(o * K + k) * stride + s];
          next[(o * grid + j) * stride + s] = std::move(acc);
        }
      }
    }
    data = std::move(next);
    extent[axis] = grid;
  }
  return data;
}

}  // namespace detail

/// C^r norm. GridSup: max over the grid of max_{|alpha| <= r} ||d^alpha P||.
/// FourierBound: sum_k (2 pi |k|_1)^r ||coef(k)|| — an upper bound for the
/// true C^r norm, hence for GridSup too.
inline double cr_norm(const TrigPoly& p, int r, NormMethod method, int grid_override = 0) {
  if (r < 0) throw std::invalid_argument("cr_norm: r must be >= 0");
  if (method == NormMethod::FourierBound) {
    double s = 0.0;
    for (const auto& [k, m] : p.modes()) {
      const double kn = static_cast<double>(l1_norm(k));
      const double weight = (r == 0) ? 1.0 : std::pow(kTwoPi * kn, r);
      s += (kn == 0.0 && r > 0 ? 1.0 : weight) * operator_norm(m);
    }
    return s;
  }
  const int grid = default_grid(p, grid_override);
  double best = 0.0;
  detail::for_each_multi_index(p.torus_dimension(), r, [&](const std::vector<int>& alpha) {
    const TrigPoly dp = detail::partial_derivative(p, alpha);
    const std::vector<Matrix> values = detail::eval_on_grid(dp, grid);
    for (const Matrix& v : values) {
      if (v.norm() <= best) continue;  // Frobenius dominates the operator norm
      best = std::max(best, operator_norm(v));
    }
  });
  return best;
}

struct NormReport {
  double c0 = 0.0;
  std::map<int, double> cr;
  NormMethod method = NormMethod::FourierBound;
};

inline NormReport norm_report(const TrigPoly& p, const std::vector<int>& orders,
                              NormMethod method, int grid_override = 0) {
  NormReport rep;
  rep.method = method;
  rep.c0 = cr_norm(p, 0, method, grid_override);
  for (int r : orders) rep.cr[r] = cr_norm(p, r, method, grid_override);
  return rep;
}

/// Discrete Fourier interpolation of an arbitrary grid-sampled function:
/// coefficient(k) = mean over the uniform grid of sampler(theta) e^{-2 i pi <k, theta>},
/// kept for |k|_1 <= out_degree.
/// Interpolation from precomputed grid samples (row-major grid order).
inline TrigPoly fourier_interpolate_values(int d, int n, int grid_per_dim, int out_degree,
                                           std::vector<Matrix> samples) {
  if (grid_per_dim < 1) throw std::invalid_argument("fourier_interpolate: bad grid");
  const std::vector<Matrix> coeffs =
      detail::separable_dft(d, n, grid_per_dim, out_degree, std::move(samples));
  TrigPoly out(d, n);
  const int K = 2 * out_degree + 1;
  LatticeVector k(d, -out_degree);
  while (true) {
    if (l1_norm(k) <= out_degree) {
      size_t idx = 0;
      for (int i = 0; i < d; ++i) idx = idx * K + (k[i] + out_degree);
      out.set_mode(k, coeffs[idx]);
    }
    int i = d - 1;
    while (i >= 0 && k[i] == out_degree) {
      k[i] = -out_degree;
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
  return out;
}

template <typename Sampler>
inline TrigPoly fourier_interpolate(int d, int n, int grid_per_dim, int out_degree,
                                    Sampler&& sampler) {
  if (grid_per_dim < 1) throw std::invalid_argument("fourier_interpolate: bad grid");
  std::vector<Matrix> samples;
  samples.reserve(static_cast<size_t>(std::pow(grid_per_dim, d)));
  detail::for_each_grid_point(d, grid_per_dim, [&](const std::vector<double>& theta) {
    samples.push_back(sampler(theta));
  });
  return fourier_interpolate_values(d, n, grid_per_dim, out_degree, std::move(samples));
}

/// Scalar polynomial times the n x n identity.
inline TrigPoly scalar_times_identity(const TrigPoly& s, int n) {
  if (s.matrix_dimension() != 1)
    throw std::invalid_argument("scalar_times_identity: input must be scalar");
  TrigPoly out(s.torus_dimension(), n);
  for (const auto& [k, m] : s.modes())
    out.set_mode(k, (m(0, 0) * Matrix::Identity(n, n)).eval());
  return out;
}

struct InversionResult {
  TrigPoly inverse;
  double max_grid_error = 0.0;  // max over grid of ||P(theta) inverse(theta) - I||
  double min_abs_det = 0.0;
  bool aliasing_warning = false;
  CheckList checks;
};

/// Discrete-Fourier interpolation of theta -> P(theta)^{-1}, truncated to
/// out_degree. The inverse of a trigonometric polynomial is generally not
/// one, so this is an approximation with an attached grid-error certificate.
inline InversionResult invert_on_grid(const TrigPoly& p, int grid_per_dim, int out_degree,
                                      double det_floor = 1e-12, double prune_tol = 1e-15) {
  const int d = p.torus_dimension();
  const int n = p.matrix_dimension();
  if (grid_per_dim < 1) throw std::invalid_argument("invert_on_grid: grid_per_dim must be >= 1");
  if (out_degree < 0) throw std::invalid_argument("invert_on_grid: out_degree must be >= 0");

  InversionResult res{TrigPoly::zero(d, n)};
  res.aliasing_warning = grid_per_dim < 2 * (p.degree() + out_degree) + 1;

  // Pass 1: invert at every grid point, tracking the determinant floor.
  std::vector<Matrix> inverses = detail::eval_on_grid(p, grid_per_dim);
  res.min_abs_det = std::numeric_limits<double>::infinity();
  long bad_index = 0;
  for (size_t i = 0; i < inverses.size(); ++i) {
    const double ad = std::abs(inverses[i].determinant());
    if (ad < res.min_abs_det) {
      res.min_abs_det = ad;
      bad_index = static_cast<long>(i);
    }
  }
  if (res.min_abs_det <= det_floor) {
    // Recover the grid coordinates of the worst point for the message.
    std::vector<long> coords(d);
    long rem = bad_index;
    for (int i = d - 1; i >= 0; --i) {
      coords[i] = rem % grid_per_dim;
      rem /= grid_per_dim;
    }
    std::string where = "(";
    for (size_t i = 0; i < coords.size(); ++i)
      where += (i ? ", " : "") +
               std::to_string(static_cast<double>(coords[i]) / grid_per_dim);
    where += ")";
    throw CertificateFailure("invert_on_grid: singular at grid point theta = " + where +
                             ", |det| = " + std::to_string(res.min_abs_det));
  }
  for (auto& v : inverses) v = v.inverse().eval();

  // Pass 2: separable DFT of the grid inverses, kept modes |k|_1 <= out_degree.
  {
    const std::vector<Matrix> coeffs =
        detail::separable_dft(d, n, grid_per_dim, out_degree, std::move(inverses));
    const int K = 2 * out_degree + 1;
    LatticeVector k(d, -out_degree);
    while (true) {
      if (l1_norm(k) <= out_degree) {
        size_t idx = 0;
        for (int i = 0; i < d; ++i) idx = idx * K + (k[i] + out_degree);
        res.inverse.set_mode(k, coeffs[idx]);
      }
      int i = d - 1;
      while (i >= 0 && k[i] == out_degree) {
        k[i] = -out_degree;
        --i;
      }
      if (i < 0) break;
      ++k[i];
    }
  }

  // Dust pruning before the certificate, so the reported grid error covers
  // the object actually returned.
  if (prune_tol > 0.0) res.inverse = res.inverse.pruned(prune_tol);

  // Certificate: residual on the sampling grid.
  {
    const std::vector<Matrix> pv = detail::eval_on_grid(p, grid_per_dim);
    const std::vector<Matrix> iv = detail::eval_on_grid(res.inverse, grid_per_dim);
    const Matrix id = Matrix::Identity(n, n);
    for (size_t i = 0; i < pv.size(); ++i) {
      const Matrix r = pv[i] * iv[i] - id;
      if (r.norm() <= res.max_grid_error) continue;
      res.max_grid_error = std::max(res.max_grid_error, operator_norm(r));
    }
  }
  res.checks.add(Check::leq("invert_on_grid.det_floor", det_floor, res.min_abs_det));
  return res;
}

struct SmallDivisorSolution {
  TrigPoly solution;
  double bound = 0.0;  // (1 / 2 pi kappa) sum_{k != 0} |k|^tau ||f_hat(k)||
  CheckList checks;
};

/// Unique zero-mean solution of d_omega g = f - f_hat(0).
/// Mode division g_hat(k) = f_hat(k) / (2 i pi <k, omega>), with a hard floor
/// of 1e-14 on |divisor| independent of the Diophantine parameters.
inline SmallDivisorSolution solve_small_divisor(const TrigPoly& f, const FrequencyVector& omega,
                                                double divisor_floor = 1e-14) {
  if (f.torus_dimension() != omega.dimension())
    throw std::invalid_argument("solve_small_divisor: dimension mismatch");
  const int deg = f.degree();
  if (deg > 0) {
    const DiophantineReport dc = omega.verify(deg);
    if (!dc.pass)
      throw HypothesisFailure("solve_small_divisor: omega fails the Diophantine check up to "
                              "degree " + std::to_string(deg));
  }
  SmallDivisorSolution out{TrigPoly::zero(f.torus_dimension(), f.matrix_dimension())};
  double sum_norm_g = 0.0;
  for (const auto& [k, m] : f.modes()) {
    if (l1_norm(k) == 0) continue;
    const double divisor = kTwoPi * omega.pairing(k);
    if (std::abs(divisor) < divisor_floor) {
      std::string ks = "(";
      for (size_t i = 0; i < k.size(); ++i) ks += (i ? ", " : "") + std::to_string(k[i]);
      ks += ")";
      throw CertificateFailure("solve_small_divisor: near-resonant mode k = " + ks +
                               ", |2 pi <k, omega>| = " + std::to_string(std::abs(divisor)));
    }
    const Matrix coef = m / Complex(0.0, divisor);
    out.solution.set_mode(k, coef);
    out.bound += std::pow(static_cast<double>(l1_norm(k)), omega.tau()) * operator_norm(m);
    sum_norm_g += operator_norm(coef);
  }
  out.bound /= kTwoPi * omega.kappa();
  out.checks.add(Check::leq("small_divisor.c0_bound", sum_norm_g, out.bound));
  return out;
}

struct ShiftedSolution {
  TrigPoly solution;
  double bound = 0.0;  // C rho^{-1} N^{(d+1)/2} ||f||_{C^0}, C recorded below
  double constant_used = 0.0;
  CheckList checks;
};

/// Solves d_omega u = alpha u + f for band-limited f (f_hat(k) = 0 beyond N),
/// requiring |alpha - 2 i pi <k, omega>| >= rho on the band.
inline ShiftedSolution solve_shifted(const TrigPoly& f, Complex alpha,
                                     const FrequencyVector& omega, int N, double rho,
                                     double divisor_floor = 1e-14) {
  if (f.torus_dimension() != omega.dimension())
    throw std::invalid_argument("solve_shifted: dimension mismatch");
  if (f.degree() > N)
    throw std::invalid_argument("solve_shifted: f has modes beyond the band |k| <= N");

  const int d = omega.dimension();
  // Divisor check over the whole band (not only f's support), per the lemma.
  long band_count = 0;
  {
    LatticeVector k(d, -N);
    while (true) {
      if (l1_norm(k) <= N) {
        ++band_count;
        const Complex divisor = Complex(0.0, kTwoPi * omega.pairing(k)) - alpha;
        if (std::abs(divisor) < rho) {
          std::string ks = "(";
          for (size_t i = 0; i < k.size(); ++i) ks += (i ? ", " : "") + std::to_string(k[i]);
          ks += ")";
          throw CertificateFailure("solve_shifted: divisor below rho at k = " + ks +
                                   ", |2 i pi <k, omega> - alpha| = " +
                                   std::to_string(std::abs(divisor)));
        }
      }
      int i = d - 1;
      while (i >= 0 && k[i] == N) {
        k[i] = -N;
        --i;
      }
      if (i < 0) break;
      ++k[i];
    }
  }

  ShiftedSolution out{TrigPoly::zero(f.torus_dimension(), f.matrix_dimension())};
  double sum_norm_u = 0.0;
  double sum_sq_f = 0.0;  // Parseval: ||f||_{L^2}^2 in the Frobenius norm
  for (const auto& [k, m] : f.modes()) {
    const Complex divisor = Complex(0.0, kTwoPi * omega.pairing(k)) - alpha;
    if (std::abs(divisor) < divisor_floor)
      throw CertificateFailure("solve_shifted: divisor below hard floor");
    const Matrix coef = m / divisor;
    out.solution.set_mode(k, coef);
    sum_norm_u += operator_norm(coef);
    sum_sq_f += m.squaredNorm();
  }
  // Cauchy-Schwarz over the band: sum ||u_hat|| <= rho^{-1} sqrt(#band) ||f||_{L^2}.
  // Reported in the lemma's shape C rho^{-1} N^{(d+1)/2} ||f||, C recorded.
  const double nn = std::max(1, N);
  out.constant_used = std::sqrt(static_cast<double>(band_count)) / std::pow(nn, (d + 1) / 2.0);
  out.bound = std::sqrt(static_cast<double>(band_count)) * std::sqrt(sum_sq_f) / rho;
  out.checks.add(Check::leq("solve_shifted.c0_bound", sum_norm_u, out.bound));
  return out;
}

}  // namespace qpr::harmonics
