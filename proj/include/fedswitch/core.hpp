#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedswitch {

using ParamVector = std::vector<double>;

// Precondition violated by a caller-supplied argument.
using invalid_argument = std::invalid_argument;

// Data or experiment setup cannot support the requested problem (e.g. a
// client without class-1 samples).
class invalid_configuration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A federated round whose sampled clients cannot produce the requested
// pooled statistic.
class invalid_round : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace detail {

inline void pairwise_accumulate(std::span<const double> weights,
                                std::span<const ParamVector* const> vectors,
                                std::span<double> out) {
  if (vectors.size() == 1) {
    const ParamVector& v = *vectors[0];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = weights[0] * v[j];
    return;
  }
  const std::size_t half = vectors.size() / 2;
  ParamVector right(out.size(), 0.0);
  pairwise_accumulate(weights.first(half), vectors.first(half), out);
  pairwise_accumulate(weights.subspan(half), vectors.subspan(half), right);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += right[j];
}

}  // namespace detail

// sum_k weights[k] * vectors[k], combined by pairwise (tree) summation in the
// given order. The summation tree depends only on the number of terms, so two
// code paths feeding identical terms get bit-identical results.
inline ParamVector weighted_pairwise_sum(std::span<const double> weights,
                                         std::span<const ParamVector* const> vectors,
                                         std::size_t dim) {
  if (weights.size() != vectors.size())
    throw invalid_argument("weighted_pairwise_sum: weights/vectors size mismatch");
  ParamVector out(dim, 0.0);
  if (vectors.empty()) return out;
  for (const ParamVector* v : vectors)
    if (v->size() != dim) throw invalid_argument("weighted_pairwise_sum: dimension mismatch");
  detail::pairwise_accumulate(weights, vectors, out);
  return out;
}

// Euclidean projection onto the ball of the given radius centred at the origin.
inline void project_to_ball(std::span<double> w, double radius) {
  const double nrm = norm2(w);
  if (nrm > radius) {
    const double scale = radius / nrm;
    for (double& x : w) x *= scale;
  }
}

}  // namespace fedswitch
