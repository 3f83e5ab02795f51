#pragma once

// Synthetic fixture generation: a real cocycle built from a known real
// constant part and a known (optionally complex-gauged) conjugation, with the
// transport defect folded into F so the emitted triple has a tiny residual.

#include <random>
#include <vector>

#include "qpr/reduction.hpp"

namespace qpr::cli {

using harmonics::FrequencyVector;
using harmonics::LatticeVector;
using harmonics::TrigPoly;
using reduction::Cocycle;
using reduction::ConjugationTriple;

struct CaseParams {
  int N = 0;              // 0: pipeline default
  double rho = 0.0;       // 0: pipeline default
  double epsilon = 1e-3;
  int m = 2;
  int r_max = 3;
  std::string mode = "diagnostic";
  std::uint64_t seed = 0;
};

struct CaseFile {
  Cocycle cocycle;
  std::vector<ConjugationTriple> triples;
  CaseParams params;
};

/// Stock Diophantine frequencies per torus dimension: golden-ratio based
/// vectors with parameters verified up to a desk-scale cutoff.
inline FrequencyVector stock_frequency(int d) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  switch (d) {
    case 1:
      return FrequencyVector({phi}, 0.4, 0.5);
    case 2:
      return FrequencyVector({1.0, phi}, 0.2, 1.2);
    case 3:
      return FrequencyVector({1.0, phi, std::sqrt(2.0)}, 0.05, 2.1);
    default:
      throw std::invalid_argument("stock_frequency: d must be 1, 2 or 3");
  }
}

struct SynthOptions {
  double amplitude = 0.1;       // size of the random gauge exponent
  double spectral_gap = 2.5;    // separation of the eigenvalues of B0
  int exp_degree = 0;           // 0: auto
  // Traceless exponent keeps det Z0 = 1 and hence Tr A constant, which keeps
  // the downstream trace-normalization gauge trivial at desk scale.
  bool traceless_gauge = true;
};

/// Picks a real B0 with well-separated spectrum, builds Z0 = exp(small random
/// real trig poly) evaluated on the grid and truncated, optionally multiplies
/// by a complex constant gauge, defines A by transporting B0 through Z0 and
/// symmetrizing to exactly real coefficients, and folds the transport defect
/// into F0. Deterministic under the seed.
inline CaseFile synth_case(int n, int d, int degree, int gauge_complexity, std::uint64_t seed,
                           const SynthOptions& opt = {}) {
  if (n < 1 || d < 1) throw std::invalid_argument("synth_case: n and d must be >= 1");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const FrequencyVector omega = stock_frequency(d);

  // Real B0 with spectrum spread out on the real axis (plus a conjugate pair
  // when n >= 2 and the draw says so), conjugated by a mild real similarity.
  RealMatrix b0_model = RealMatrix::Zero(n, n);
  {
    int i = 0;
    const bool complex_pair = n >= 2 && unif(rng) < 0.5;
    if (complex_pair) {
      const double re = opt.spectral_gap * (gauss(rng) > 0 ? 1.0 : -1.0);
      const double im = opt.spectral_gap * (0.75 + 0.5 * unif(rng));
      b0_model(0, 0) = re;
      b0_model(0, 1) = im;
      b0_model(1, 0) = -im;
      b0_model(1, 1) = re;
      i = 2;
    }
    for (; i < n; ++i) b0_model(i, i) = opt.spectral_gap * (i + 1) * (unif(rng) > 0.5 ? 1 : -1);
  }
  RealMatrix sim = RealMatrix::Identity(n, n) + random_real_matrix(n, n, rng, 0.15 / n);
  const Matrix b0 = (sim.inverse() * b0_model * sim).cast<Complex>();

  // Real gauge exponent and its exponential on the grid.
  TrigPoly expo(d, n);
  {
    // random real trig poly of the requested degree
    std::vector<int> k(d, -degree);
    while (true) {
      int l1 = 0;
      for (int c : k) l1 += std::abs(c);
      if (l1 <= degree && l1 > 0) {
        int first = 0;
        for (int i = 0; i < d; ++i)
          if (k[i] != 0) {
            first = k[i];
            break;
          }
        if (first > 0) {
          Matrix m(n, n);
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
              m(r, c) = opt.amplitude * Complex(gauss(rng), gauss(rng)) / (1.0 + l1);
          if (opt.traceless_gauge) m -= (m.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
          LatticeVector kk(k.begin(), k.end());
          LatticeVector nk(kk);
          for (int& c : nk) c = -c;
          expo.set_mode(kk, m);
          expo.set_mode(nk, m.conjugate());
        }
      }
      int i = d - 1;
      while (i >= 0 && k[i] == degree) {
        k[i] = -degree;
        --i;
      }
      if (i < 0) break;
      ++k[i];
    }
    Matrix m0(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m0(r, c) = opt.amplitude * gauss(rng);
    if (opt.traceless_gauge) m0 -= (m0.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
    expo.set_mode(LatticeVector(d, 0), m0);
  }

  const int z_degree = opt.exp_degree > 0 ? opt.exp_degree : std::max(3 * degree, 4);
  const int grid = std::max(4 * (z_degree + degree) + 1, 16);
  TrigPoly z0;
  {
    std::vector<Matrix> vals = harmonics::detail::eval_on_grid(expo, grid);
    for (auto& v : vals) v = matrix_exp(v);
    z0 = harmonics::fourier_interpolate_values(d, n, grid, z_degree, std::move(vals))
             .symmetrized_real()
             .pruned(1e-15);
  }

  // Complex constant gauge.
  if (gauge_complexity >= 1) {
    const double phase = 0.25 + 0.5 * unif(rng);  // stays away from real axis
    z0 = std::polar(1.0, phase) * z0;
  }
  Matrix b_emit = b0;
  if (gauge_complexity >= 2) {
    // Unitary complex gauge: B goes complex but keeps a conjugation-stable
    // spectrum (it is similar to the real B0).
    Matrix h = random_matrix(n, n, rng, 0.3 / n);
    h = ((h + h.adjoint()) / 2.0).eval();
    const Matrix q = matrix_exp(Complex(0.0, 1.0) * h);
    z0 = z0.mul_const(q);
    b_emit = q.adjoint() * b0 * q;
  }

  // A from the transport of B0, interpolated and made exactly real.
  const TrigPoly dz = harmonics::directional_derivative(z0, omega);
  const int a_degree = z_degree + degree;
  const int a_grid = std::max(4 * (2 * a_degree) + 1, 16);
  TrigPoly a;
  {
    const std::vector<Matrix> zv = harmonics::detail::eval_on_grid(z0, a_grid);
    const std::vector<Matrix> dzv = harmonics::detail::eval_on_grid(dz, a_grid);
    std::vector<Matrix> vals(zv.size());
    for (size_t i = 0; i < zv.size(); ++i)
      vals[i] = ((dzv[i] + zv[i] * b_emit) * zv[i].inverse()).eval();
    a = harmonics::fourier_interpolate_values(d, n, a_grid, a_degree, std::move(vals))
            .symmetrized_real()
            .pruned(1e-15);
  }

  Cocycle cocycle(omega, a);

  // Transport defect into F0: F = -Z^{-1} (dZ - A Z + Z B) + 0 so that the
  // residual of (Z0, B0, F0) is inversion/truncation dust only.
  const int inv_degree = 2 * z0.degree();
  const auto z_inv = harmonics::invert_on_grid(
      z0, std::max(4 * (z0.degree() + inv_degree) + 1, 16), inv_degree);
  const TrigPoly defect = dz - a * z0 + z0.mul_const(b_emit);
  const TrigPoly f0 =
      harmonics::truncate(Complex(-1.0, 0.0) * (z_inv.inverse * defect), 2 * a_degree)
          .pruned(1e-15);

  CaseFile cf{cocycle, {}, {}};
  ConjugationTriple t;
  t.Z = z0;
  t.Z_inv = z_inv.inverse;
  t.inverse_error = z_inv.max_grid_error;
  t.B = b_emit;
  t.F = f0;
  t.residual_norm = harmonics::cr_norm(reduction::residual(cocycle, t), 0,
                                       harmonics::NormMethod::GridSup);
  cf.triples.push_back(std::move(t));
  cf.params.seed = seed;
  return cf;
}

}  // namespace qpr::cli
