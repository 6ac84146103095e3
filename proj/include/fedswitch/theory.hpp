#pragma once

// Step sizes, tolerances and the softmax temperature lower bound prescribed
// by the convergence guarantees, evaluated from problem constants.
//
// Partial participation (r = m/n < 1):
//   eta   = D / (L sqrt(8K)),   gamma = D / (L E sqrt(8K))
//   eps'  = D L / sqrt(K/32) * [1 + 2 s2 (3 + 8 ln(8/delta)/K)
//                               + s sqrt(8 ln(8/delta)) (1 + E/sqrt(6K))]
//   eps   = eps' + 4 sigma_zeta sqrt(2 ln(24 K m/delta) / B_zeta)
//               + 4 sigma / (|ln(1-r)| n) ln(32/delta)
//   alpha >= 2 ln m / eps'
// with s2 = (sigma_g^2 / B_g) / (L^2 E), s = sqrt(s2).
//
// Full participation (r = 1) drops the sampling term and uses ln(12 K n/delta)
// in the estimation term. The single-update variant uses
//   eta = gamma = D / (2 L sqrt(K)),
//   eps' = 2 D L / sqrt(K) * [1 + s2 (3 + 8 ln(8/delta)/K) + s sqrt(8 ln(8/delta))]
// with E = 1.

#include <cmath>
#include <cstddef>

#include "fedswitch/core.hpp"

namespace fedswitch {

enum class TheoremVariant {
  local_updates,  // partial or full participation with E >= 1
  single_update,  // full participation, E = 1
};

struct TheoremInputs {
  double D = 1.0;
  double L = 1.0;
  std::size_t K = 1;
  std::size_t E = 1;
  std::size_t m = 1;
  std::size_t n = 1;
  double sigma_g = 0.0;
  std::size_t B_g = 1;
  double sigma_zeta = 0.0;
  std::size_t B_zeta = 1;
  double sigma = 0.0;  // client heterogeneity scale
  double delta = 0.1;
  TheoremVariant variant = TheoremVariant::local_updates;
};

struct TheoremHyperparameters {
  double eta = 0.0;
  double gamma = 0.0;
  double epsilon_prime = 0.0;
  double epsilon = 0.0;
  double alpha_min = 0.0;
  double sigma_bar_g_sq = 0.0;
  double estimation_term = 0.0;
  double sampling_term = 0.0;
};

inline TheoremHyperparameters theorem_hyperparameters(const TheoremInputs& in) {
  if (!(in.D > 0.0) || !(in.L > 0.0)) throw invalid_argument("theorem_hyperparameters: D and L must be > 0");
  if (in.K < 1 || in.E < 1 || in.m < 1 || in.n < 1 || in.B_g < 1 || in.B_zeta < 1)
    throw invalid_argument("theorem_hyperparameters: K, E, m, n and batch sizes must be >= 1");
  if (in.m > in.n) throw invalid_argument("theorem_hyperparameters: participation ratio m/n outside (0, 1]");
  if (!(in.delta > 0.0 && in.delta < 1.0)) throw invalid_argument("theorem_hyperparameters: delta must lie in (0, 1)");
  if (in.sigma_g < 0.0 || in.sigma_zeta < 0.0 || in.sigma < 0.0)
    throw invalid_argument("theorem_hyperparameters: noise scales must be >= 0");
  if (in.variant == TheoremVariant::single_update && (in.E != 1 || in.m != in.n))
    throw invalid_argument("theorem_hyperparameters: single-update variant needs E = 1 and m = n");

  const double D = in.D, L = in.L;
  const double K = static_cast<double>(in.K), E = static_cast<double>(in.E);
  const double m = static_cast<double>(in.m), n = static_cast<double>(in.n);
  const double log8 = std::log(8.0 / in.delta);

  TheoremHyperparameters h;
  h.sigma_bar_g_sq = (in.sigma_g * in.sigma_g / static_cast<double>(in.B_g)) / (L * L * E);
  const double s2 = h.sigma_bar_g_sq, s = std::sqrt(s2);

  if (in.variant == TheoremVariant::single_update) {
    h.eta = h.gamma = D / (2.0 * L * std::sqrt(K));
    h.epsilon_prime = 2.0 * D * L / std::sqrt(K) * (1.0 + s2 * (3.0 + 8.0 * log8 / K) + s * std::sqrt(8.0 * log8));
  } else {
    h.eta = D / (L * std::sqrt(8.0 * K));
    h.gamma = D / (L * E * std::sqrt(8.0 * K));
    h.epsilon_prime = D * L / std::sqrt(K / 32.0) *
                      (1.0 + 2.0 * s2 * (3.0 + 8.0 * log8 / K) +
                       s * std::sqrt(8.0 * log8) * (1.0 + E / std::sqrt(6.0 * K)));
  }

  const bool full = in.m == in.n;
  const double count = full ? 12.0 * K * n : 24.0 * K * m;
  h.estimation_term = 4.0 * in.sigma_zeta * std::sqrt(2.0 * std::log(count / in.delta) / static_cast<double>(in.B_zeta));
  if (!full) {
    const double r = m / n;
    h.sampling_term = 4.0 * in.sigma / (std::abs(std::log(1.0 - r)) * n) * std::log(32.0 / in.delta);
  }
  h.epsilon = h.epsilon_prime + h.estimation_term + h.sampling_term;
  h.alpha_min = 2.0 * std::log(full ? n : m) / h.epsilon_prime;
  return h;
}

}  // namespace fedswitch
