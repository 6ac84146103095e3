#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "fedswitch/round_common.hpp"
#include "fedswitch/sampling.hpp"

using namespace fedswitch;

namespace {

RngStreamKey key_for(std::uint64_t seed, std::int64_t round, Purpose purpose = Purpose::subset) {
  return {seed, round, RngStreamKey::kNone, RngStreamKey::kNone, purpose, 0};
}

}  // namespace

TEST(SampleSubset, FullSetWhenMEqualsN) {
  for (std::int64_t k = 0; k < 20; ++k) {
    const auto mask = sample_subset(6, 6, key_for(3, k));
    EXPECT_EQ(mask, ClientMask::full(6));
  }
}

TEST(SampleSubset, Deterministic) {
  EXPECT_EQ(sample_subset(30, 7, key_for(11, 4)), sample_subset(30, 7, key_for(11, 4)));
  EXPECT_NE(sample_subset(30, 7, key_for(11, 4)), sample_subset(30, 7, key_for(11, 5)));
}

TEST(SampleSubset, RejectsBadSizes) {
  EXPECT_THROW(sample_subset(4, 0, key_for(1, 0)), invalid_argument);
  EXPECT_THROW(sample_subset(4, 5, key_for(1, 0)), invalid_argument);
}

TEST(SampleSubset, UniformOverPairs) {
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 60000;
  for (int k = 0; k < draws; ++k) counts[sample_subset(4, 2, key_for(7, k)).members()]++;
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [subset, c] : counts) EXPECT_NEAR(c / double(draws), 1.0 / 6.0, 0.01);
}

TEST(SampleSubset, LeaveOneOutFrequencies) {
  const std::size_t n = 8;
  const int draws = 100000;
  std::vector<int> left_out(n, 0);
  for (int k = 0; k < draws; ++k) {
    const auto mask = sample_subset(n, n - 1, key_for(9, k));
    for (std::size_t i = 0; i < n; ++i)
      if (!mask.contains(i)) ++left_out[i];
  }
  const double p = 1.0 / n, se = std::sqrt(p * (1 - p) / draws);
  for (int c : left_out) EXPECT_NEAR(c / double(draws), p, 3 * se);
}

TEST(SampleBatch, SingletonDataset) {
  const auto b = sample_batch(1, 50, key_for(1, 0, Purpose::value_batch));
  for (std::size_t i : b) EXPECT_EQ(i, 0u);
}

TEST(SampleBatch, DeterministicAndSeedSensitive) {
  const auto a = sample_batch(1000, 64, key_for(5, 2, Purpose::grad_batch));
  EXPECT_EQ(a, sample_batch(1000, 64, key_for(5, 2, Purpose::grad_batch)));
  EXPECT_NE(a, sample_batch(1000, 64, key_for(6, 2, Purpose::grad_batch)));
}

TEST(SampleBatch, Frequencies) {
  const auto b = sample_batch(10, 100000, key_for(13, 0, Purpose::value_batch));
  std::vector<int> counts(10, 0);
  for (std::size_t i : b) counts.at(i)++;
  for (int c : counts) EXPECT_NEAR(c / 1e5, 0.1, 0.005);
}

TEST(SampleBatch, RejectsEmpty) {
  EXPECT_THROW(sample_batch(0, 3, key_for(1, 0)), invalid_argument);
  EXPECT_THROW(sample_batch(3, 0, key_for(1, 0)), invalid_argument);
}

TEST(StreamKeys, DistinctPurposesGiveDistinctSeeds) {
  std::set<std::uint64_t> seeds;
  for (auto p : {Purpose::subset, Purpose::value_batch, Purpose::grad_batch, Purpose::init})
    for (std::uint8_t ch : {0, 1}) seeds.insert(stream_seed({1, 0, 0, 0, p, ch}));
  EXPECT_EQ(seeds.size(), 8u);
  EXPECT_NE(stream_seed({1, 0, 1, 0, Purpose::grad_batch, 0}), stream_seed({1, 1, 0, 0, Purpose::grad_batch, 0}));
}

TEST(StreamKeys, FrozenFirstDraw) {
  // Pins cross-platform stream derivation.
  SplitMix64 a(0);
  EXPECT_EQ(a(), 0xe220a8397b1dcdafULL);
  auto s = make_stream({42, 3, 1, RngStreamKey::kNone, Purpose::value_batch, 1});
  auto t = make_stream({42, 3, 1, RngStreamKey::kNone, Purpose::value_batch, 1});
  EXPECT_EQ(s(), t());
}

TEST(StreamKeys, ValueStreamsIndependentOfLocalSteps) {
  RunConfig a, b;
  a.E = 1;
  b.E = 5;
  a.run_seed = b.run_seed = 77;
  EXPECT_EQ(value_key(a, 3, 2, Component::constraint), value_key(b, 3, 2, Component::constraint));
  EXPECT_NE(stream_seed(value_key(a, 3, 2, Component::objective)),
            stream_seed(grad_key(a, 3, 2, 0, Component::objective)));
}

TEST(SplitMix64, BelowIsInRangeAndUniformIsHalfOpen) {
  SplitMix64 rng(123);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LT(rng.below(7), 7u);
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SplitMix64, NormalMoments) {
  SplitMix64 rng(321);
  double s = 0.0, ss = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(ss / n, 1.0, 0.02);
}
