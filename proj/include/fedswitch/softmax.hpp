#pragma once

// Softmax weights over clients, the masked variant restricted to a
// participating subset, softmax means, and the bounds they satisfy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "fedswitch/core.hpp"

namespace fedswitch {

// Probability vector over client indices.
struct WeightVector {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }
};

// Sorted, duplicate-free subset of {0, ..., universe-1}.
class ClientMask {
 public:
  ClientMask() = default;

  ClientMask(std::size_t universe, std::vector<std::size_t> members)
      : universe_(universe), members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
      throw invalid_argument("ClientMask: duplicate member");
    if (!members_.empty() && members_.back() >= universe_)
      throw invalid_argument("ClientMask: member outside client range");
  }

  static ClientMask full(std::size_t universe) {
    std::vector<std::size_t> all(universe);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return ClientMask(universe, std::move(all));
  }

  std::size_t universe() const { return universe_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<std::size_t>& members() const { return members_; }
  bool contains(std::size_t i) const {
    return std::binary_search(members_.begin(), members_.end(), i);
  }

  friend bool operator==(const ClientMask&, const ClientMask&) = default;

 private:
  std::size_t universe_ = 0;
  std::vector<std::size_t> members_;
};

namespace detail {

inline void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw invalid_argument(std::string(what) + ": non-finite input");
}

inline void require_alpha(double alpha, const char* what) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw invalid_argument(std::string(what) + ": alpha must be finite and >= 0");
}

// Normalised exp(alpha * (v_i - max)) over the listed indices, written into
// out at those positions. Shared by the full and masked forms so a full mask
// reproduces the unmasked weights bit for bit.
inline void softmax_into(std::span<const double> v, std::span<const std::size_t> idx,
                         double alpha, std::span<double> out) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i : idx) vmax = std::max(vmax, v[i]);
  double z = 0.0;
  for (std::size_t i : idx) {
    // alpha * (v - vmax) is <= 0; alpha = 0 must give exp(0) even when the
    // difference is large.
    const double e = alpha == 0.0 ? 1.0 : std::exp(alpha * (v[i] - vmax));
    out[i] = e;
    z += e;
  }
  for (std::size_t i : idx) out[i] /= z;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace detail

/// softmax(alpha * v), computed with max-subtraction so no finite alpha * v
/// overflows.
inline WeightVector softmax_weights(std::span<const double> v, double alpha) {
  detail::require_finite(v, "softmax_weights");
  detail::require_alpha(alpha, "softmax_weights");
  if (v.empty()) throw invalid_argument("softmax_weights: empty input");
  WeightVector w{std::vector<double>(v.size(), 0.0)};
  const auto idx = detail::iota_indices(v.size());
  detail::softmax_into(v, idx, alpha, w.weights);
  return w;
}

/// softmax restricted to the mask; entries outside the mask are exactly 0.
inline WeightVector masked_softmax(std::span<const double> v, const ClientMask& mask,
                                   double alpha) {
  if (mask.empty()) throw invalid_argument("masked_softmax: empty mask");
  if (mask.universe() != v.size())
    throw invalid_argument("masked_softmax: mask universe does not match vector length");
  detail::require_alpha(alpha, "masked_softmax");
  for (std::size_t i : mask.members())
    if (!std::isfinite(v[i])) throw invalid_argument("masked_softmax: non-finite input");
  WeightVector w{std::vector<double>(v.size(), 0.0)};
  detail::softmax_into(v, mask.members(), alpha, w.weights);
  return w;
}

/// <softmax(alpha v), v>: a smooth lower approximation of max(v).
inline double softmax_mean(std::span<const double> v, double alpha) {
  const WeightVector w = softmax_weights(v, alpha);
  return dot(w.weights, v);
}

/// Softmax mean over the masked entries only. Equal to softmax_mean of the
/// extracted subvector.
inline double masked_softmax_mean(std::span<const double> v, const ClientMask& mask,
                                  double alpha) {
  const WeightVector w = masked_softmax(v, mask, alpha);
  double s = 0.0;
  for (std::size_t i : mask.members()) s += w.weights[i] * v[i];
  return s;
}

/// Upper bound ln(count)/alpha on max(v) - softmax_mean(v, alpha).
inline double max_gap_bound(std::size_t count, double alpha) {
  if (count == 0) throw invalid_argument("max_gap_bound: count must be positive");
  if (!(alpha > 0.0)) throw invalid_argument("max_gap_bound: alpha must be > 0");
  return std::log(static_cast<double>(count)) / alpha;
}

/// Smallest sigma such that max(x) - X, for X uniform over the entries of x,
/// is stochastically dominated by Unif[0, sigma]. Computed from the scaled
/// gaps of the ascending order statistics.
inline double fsd_uniform_sigma(std::span<const double> x) {
  if (x.empty()) throw invalid_argument("fsd_uniform_sigma: empty input");
  detail::require_finite(x, "fsd_uniform_sigma");
  std::vector<double> sorted(x.begin(), x.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double top = sorted.back();
  double sigma = 0.0;
  // Order statistic i (1-based) has denominator 1 - (i-1)/n.
  for (std::size_t i = 1; i < n; ++i) {
    const double denom = 1.0 - static_cast<double>(i - 1) / static_cast<double>(n);
    sigma = std::max(sigma, (top - sorted[i - 1]) / denom);
  }
  return sigma;
}

/// Smallest sigma for which the empirical condition
///   (1/n) #{i : max(x) - x_i >= t} <= (1 - t/sigma)_+  for all t
/// actually holds: the j-th smallest entry needs sigma >= gap_j / (1 - j/n).
/// Differs from fsd_uniform_sigma by one in the denominator index.
inline double fsd_minimal_sigma(std::span<const double> x) {
  if (x.empty()) throw invalid_argument("fsd_minimal_sigma: empty input");
  detail::require_finite(x, "fsd_minimal_sigma");
  std::vector<double> sorted(x.begin(), x.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double top = sorted.back();
  double sigma = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double denom = 1.0 - static_cast<double>(j) / static_cast<double>(n);
    sigma = std::max(sigma, (top - sorted[j - 1]) / denom);
  }
  return sigma;
}

/// Largest violation of the empirical FSD condition at sigma over a grid of
/// `points` thresholds in [0, 2 sigma]; <= 0 means the condition holds there.
inline double fsd_cdf_violation(std::span<const double> x, double sigma, std::size_t points = 1000) {
  if (x.empty()) throw invalid_argument("fsd_cdf_violation: empty input");
  const double top = *std::max_element(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s <= points; ++s) {
    const double t = 2.0 * sigma * static_cast<double>(s) / static_cast<double>(points);
    double frac = 0.0;
    for (double xi : x) frac += (top - xi >= t) ? 1.0 : 0.0;
    frac /= n;
    const double tail = sigma > 0.0 ? std::max(0.0, 1.0 - t / sigma) : (t > 0.0 ? 0.0 : 1.0);
    worst = std::max(worst, frac - tail);
  }
  return worst;
}

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t j = 1; j <= k; ++j)
    r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
  return r;
}

}  // namespace detail

/// Checks C(n', m) / C(n, m) <= (1 - m/n)^(n (1 - n'/n)).
inline bool binom_ratio_bound_holds(long n, long n_prime, long m) {
  if (n < 1 || m < 0 || n_prime < m || n < n_prime)
    throw invalid_argument("binom_ratio_bound_holds: need n >= n' >= m >= 0 and n >= 1");
  const auto un = static_cast<std::size_t>(n);
  const double ratio = detail::binomial(static_cast<std::size_t>(n_prime), static_cast<std::size_t>(m)) /
                       detail::binomial(un, static_cast<std::size_t>(m));
  const double nd = static_cast<double>(n);
  const double exponent = nd - static_cast<double>(n_prime);
  const double rhs = std::pow(1.0 - static_cast<double>(m) / nd, exponent);
  return ratio <= rhs * (1.0 + 1e-12) + 1e-300;
}

/// Shannon entropy (nats) of a weight vector; zero entries contribute 0.
inline double entropy(const WeightVector& w) {
  double h = 0.0;
  for (double p : w.weights)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace fedswitch
