#pragma once

// Frequency vectors with Diophantine parameters, and the finite lattice scan
// that verifies the Diophantine condition up to a cutoff. |k| is the l^1
// norm throughout.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qpr::harmonics {

using LatticeVector = std::vector<int>;

inline int l1_norm(const LatticeVector& k) {
  int s = 0;
  for (int c : k) s += std::abs(c);
  return s;
}

namespace detail {

/// Visits every lattice vector with |k|_1 <= K whose first nonzero component
/// is positive (one representative per {k, -k} pair), in ascending
/// lexicographic order. f(k) is called for each.
template <typename F>
void scan_half_ball(int d, int K, F&& f) {
  LatticeVector k(d, 0);
  // Iterate the full box [-K, K]^d lexicographically, filter by l1 ball and
  // sign canonicalization. Desk-scale d keeps this cheap.
  for (int i = 0; i < d; ++i) k[i] = -K;
  while (true) {
    if (l1_norm(k) <= K) {
      int first_nonzero = 0;
      for (int i = 0; i < d; ++i) {
        if (k[i] != 0) {
          first_nonzero = k[i];
          break;
        }
      }
      if (first_nonzero > 0) f(k);
    }
    int i = d - 1;
    while (i >= 0 && k[i] == K) {
      k[i] = -K;
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
}

}  // namespace detail

struct DiophantineReport {
  LatticeVector worst_k;
  double worst_product = std::numeric_limits<double>::infinity();  // |<k,w>| * |k|^tau
  bool pass = false;
};

/// Scans 0 < |k|_1 <= K_check for the minimum of |<k,omega>| * |k|_1^tau and
/// compares it against kappa. Representatives are canonicalized to have
/// positive first nonzero component (the product is even in k).
inline DiophantineReport check_diophantine(const std::vector<double>& omega, double kappa,
                                           double tau, int K_check) {
  const int d = static_cast<int>(omega.size());
  if (d == 0) throw std::invalid_argument("check_diophantine: zero-dimensional omega");
  for (double w : omega)
    if (!std::isfinite(w)) throw std::invalid_argument("check_diophantine: non-finite omega entry");
  if (K_check < 1) throw std::invalid_argument("check_diophantine: K_check must be >= 1");

  DiophantineReport rep;
  detail::scan_half_ball(d, K_check, [&](const LatticeVector& k) {
    double pairing = 0.0;
    for (int i = 0; i < d; ++i) pairing += k[i] * omega[i];
    const double product = std::abs(pairing) * std::pow(static_cast<double>(l1_norm(k)), tau);
    if (product < rep.worst_product) {
      rep.worst_product = product;
      rep.worst_k = k;
    }
  });
  rep.pass = rep.worst_product >= kappa;
  return rep;
}

/// Rationally independent omega in R^d together with its Diophantine
/// parameters (kappa, tau). The DC inequality is verified on demand up to a
/// finite cutoff, never for all k.
class FrequencyVector {
 public:
  FrequencyVector(std::vector<double> omega, double kappa, double tau)
      : omega_(std::move(omega)), kappa_(kappa), tau_(tau) {
    if (omega_.empty()) throw std::invalid_argument("FrequencyVector: d must be >= 1");
    if (!(kappa_ > 0.0)) throw std::invalid_argument("FrequencyVector: kappa must be > 0");
    if (!(tau_ > static_cast<double>(omega_.size()) - 1.0))
      throw std::invalid_argument("FrequencyVector: tau must exceed d - 1");
    for (double w : omega_)
      if (!std::isfinite(w)) throw std::invalid_argument("FrequencyVector: non-finite entry");
  }

  int dimension() const { return static_cast<int>(omega_.size()); }
  const std::vector<double>& omega() const { return omega_; }
  double kappa() const { return kappa_; }
  double tau() const { return tau_; }

  /// <k, omega>
  double pairing(const LatticeVector& k) const {
    if (k.size() != omega_.size())
      throw std::invalid_argument("FrequencyVector::pairing: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < k.size(); ++i) s += k[i] * omega_[i];
    return s;
  }

  DiophantineReport verify(int K_check) const {
    return check_diophantine(omega_, kappa_, tau_, K_check);
  }

  /// Frequency omega/2 with kappa/2: |<k,omega/2>| >= (kappa/2)/|k|^tau.
  FrequencyVector halved() const {
    std::vector<double> half(omega_);
    for (double& w : half) w *= 0.5;
    return FrequencyVector(std::move(half), kappa_ / 2.0, tau_);
  }

 private:
  std::vector<double> omega_;
  double kappa_;
  double tau_;
};

}  // namespace qpr::harmonics
