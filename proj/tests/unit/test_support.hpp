#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fedswitch/datasets.hpp"
#include "fedswitch/problems/oracle.hpp"
#include "fedswitch/sampling.hpp"
#include "fedswitch/rng.hpp"

namespace fedswitch::testing {

inline SplitMix64 test_rng(std::uint64_t seed) {
  return make_stream({seed, 0, 0, 0, Purpose::synthetic, 99});
}

inline std::vector<double> random_vector(SplitMix64& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

// Central differences with h = 1e-6 (1 + |w_j|).
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::span<const double> w) {
  std::vector<double> x(w.begin(), w.end()), g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(w[j]));
    const double keep = x[j];
    x[j] = keep + h;
    const double up = f(x);
    x[j] = keep - h;
    const double down = f(x);
    x[j] = keep;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += (a[j] - b[j]) * (a[j] - b[j]);
    den += b[j] * b[j];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

// A client whose rows are given explicitly; labels and protected flags drive
// the index sets.
inline ClientDataset make_toy_client(std::size_t id, std::size_t cols, std::vector<double> features,
                                     std::vector<int> labels, std::vector<bool> is_protected = {}) {
  Table t;
  t.cols = cols;
  t.rows = labels.size();
  t.features = std::move(features);
  t.labels = std::move(labels);
  t.is_protected = std::move(is_protected);
  t.feature_names.assign(cols, "x");
  t.is_numeric.assign(cols, true);
  std::vector<std::size_t> all(t.rows);
  for (std::size_t r = 0; r < t.rows; ++r) all[r] = r;
  return make_client(t, all, id);
}

inline ClientDataset random_client(SplitMix64& rng, std::size_t id, std::size_t rows, std::size_t cols,
                                   bool with_groups = false) {
  std::vector<double> feats(rows * cols);
  for (double& x : feats) x = rng.normal();
  std::vector<int> labels(rows);
  std::vector<bool> prot;
  for (std::size_t r = 0; r < rows; ++r) labels[r] = static_cast<int>(r % 2);
  if (with_groups) {
    prot.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) prot[r] = (r / 2) % 2 == 0;
  }
  return make_toy_client(id, cols, std::move(feats), std::move(labels), std::move(prot));
}

// f_i(w) = 1/2 |w - a_i|^2 exactly; g_i(w) = c_i with zero subgradient. The
// batch is ignored, so every estimate equals the exact value.
struct QuadraticOracle {
  std::vector<ParamVector> anchors;
  std::vector<double> constraint;
  ParamVector start;

  std::size_t num_clients() const { return anchors.size(); }
  std::size_t dimension() const { return start.size(); }
  std::vector<std::size_t> draw_batch(std::size_t, Component, std::size_t size, const RngStreamKey& key) const {
    return sample_batch(4, size, key);
  }
  double value(std::size_t i, Component c, std::span<const double> w, std::span<const std::size_t>) const {
    return exact(i, c, w);
  }
  void subgrad(std::size_t i, Component c, std::span<const double> w, std::span<const std::size_t>,
               std::span<double> out) const {
    for (std::size_t j = 0; j < w.size(); ++j) out[j] = c == Component::objective ? w[j] - anchors[i][j] : 0.0;
  }
  double exact(std::size_t i, Component c, std::span<const double> w) const {
    if (c == Component::constraint) return constraint[i];
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += 0.5 * (w[j] - anchors[i][j]) * (w[j] - anchors[i][j]);
    return s;
  }
  ParamVector initial_point(const RngStreamKey&) const { return start; }
};

}  // namespace fedswitch::testing
