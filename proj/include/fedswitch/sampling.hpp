#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/rng.hpp"
#include "fedswitch/softmax.hpp"

namespace fedswitch {

/// Uniform m-subset of {0..n-1}: partial Fisher-Yates, first m positions.
inline ClientMask sample_subset(std::size_t n, std::size_t m, const RngStreamKey& key) {
  if (m == 0 || m > n) throw invalid_argument("sample_subset: need 1 <= m <= n");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (m < n) {
    SplitMix64 rng = make_stream(key);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(perm[i], perm[j]);
    }
    perm.resize(m);
  }
  return ClientMask(n, std::move(perm));
}

/// batch i.i.d. uniform draws, with replacement, from {0..dataset_size-1}.
inline std::vector<std::size_t> sample_batch(std::size_t dataset_size, std::size_t batch,
                                             const RngStreamKey& key) {
  if (dataset_size == 0) throw invalid_argument("sample_batch: empty dataset");
  if (batch == 0) throw invalid_argument("sample_batch: batch must be >= 1");
  SplitMix64 rng = make_stream(key);
  std::vector<std::size_t> out(batch);
  for (auto& idx : out) idx = static_cast<std::size_t>(rng.below(dataset_size));
  return out;
}

/// Draws batch elements i.i.d. from an explicit population of indices.
inline std::vector<std::size_t> sample_from(std::span<const std::size_t> population,
                                            std::size_t batch, SplitMix64& rng) {
  if (population.empty()) throw invalid_argument("sample_from: empty population");
  std::vector<std::size_t> out(batch);
  for (auto& idx : out) idx = population[static_cast<std::size_t>(rng.below(population.size()))];
  return out;
}

}  // namespace fedswitch
