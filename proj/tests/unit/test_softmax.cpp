#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fedswitch/softmax.hpp"
#include "test_support.hpp"

using namespace fedswitch;
using fedswitch::testing::random_vector;
using fedswitch::testing::test_rng;

TEST(SoftmaxWeights, ConstantVectorIsUniform) {
  const std::vector<double> v(7, 3.25);
  for (double alpha : {0.0, 1.0, 6400.0, 1e8}) {
    const auto w = softmax_weights(v, alpha);
    for (double p : w.weights) EXPECT_NEAR(p, 1.0 / 7.0, 1e-15);
  }
}

TEST(SoftmaxWeights, LogTwoTemperature) {
  const std::vector<double> v{0.0, 1.0};
  const auto w = softmax_weights(v, std::log(2.0));
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-15);
}

TEST(SoftmaxWeights, ZeroTemperatureIsUniform) {
  const auto w = softmax_weights(std::vector<double>{0.0, 1.0}, 0.0);
  EXPECT_EQ(w[0], 0.5);
  EXPECT_EQ(w[1], 0.5);
}

TEST(SoftmaxWeights, NoOverflowAtLargeTemperature) {
  const std::vector<double> v{700.0, 710.0, -1e6};
  const auto w = softmax_weights(v, 1e8);
  EXPECT_EQ(w[1], 1.0);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_TRUE(all_finite(w.weights));
}

TEST(SoftmaxWeights, RejectsBadInput) {
  EXPECT_THROW(softmax_weights(std::vector<double>{0.0, NAN}, 1.0), invalid_argument);
  EXPECT_THROW(softmax_weights(std::vector<double>{0.0, INFINITY}, 1.0), invalid_argument);
  EXPECT_THROW(softmax_weights(std::vector<double>{0.0}, -1.0), invalid_argument);
  EXPECT_THROW(softmax_weights(std::vector<double>{}, 1.0), invalid_argument);
}

TEST(MaskedSoftmax, ExcludedEntryIsZero) {
  const std::vector<double> v{0.0, 1.0, 5.0};
  const auto w = masked_softmax(v, ClientMask(3, {0, 1}), std::log(2.0));
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(w[2], 0.0);
}

TEST(MaskedSoftmax, FullMaskMatchesUnmaskedBitwise) {
  auto rng = test_rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_vector(rng, 9, 5.0);
    const double alpha = 10.0 * rng.uniform();
    EXPECT_EQ(masked_softmax(v, ClientMask::full(9), alpha).weights, softmax_weights(v, alpha).weights);
  }
}

TEST(MaskedSoftmax, ConstantOnMaskIsUniform) {
  const std::vector<double> v{2.0, 9.0, 2.0, 2.0};
  const auto w = masked_softmax(v, ClientMask(4, {0, 2, 3}), 50.0);
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_NEAR(w[2], 1.0 / 3.0, 1e-15);
}

TEST(MaskedSoftmax, EmptyMaskThrows) {
  EXPECT_THROW(masked_softmax(std::vector<double>{1.0, 2.0}, ClientMask(2, {}), 1.0), invalid_argument);
  EXPECT_THROW(masked_softmax_mean(std::vector<double>{1.0, 2.0}, ClientMask(2, {}), 1.0), invalid_argument);
}

TEST(ClientMask, RejectsDuplicatesAndOutOfRange) {
  EXPECT_THROW(ClientMask(3, {1, 1}), invalid_argument);
  EXPECT_THROW(ClientMask(3, {3}), invalid_argument);
  EXPECT_EQ(ClientMask(5, {4, 0, 2}).members(), (std::vector<std::size_t>{0, 2, 4}));
}

TEST(SoftmaxMean, Examples) {
  EXPECT_NEAR(softmax_mean(std::vector<double>{0.0, 1.0}, std::log(2.0)), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(softmax_mean(std::vector<double>{-4.5}, 123.0), -4.5);
  const std::vector<double> v{0.3, -1.2, 2.0, 0.7};
  EXPECT_NEAR(softmax_mean(v, 0.0), std::accumulate(v.begin(), v.end(), 0.0) / 4.0, 1e-15);
}

TEST(SoftmaxMean, ShiftByConstant) {
  const std::vector<double> v{0.3, -1.2, 2.0, 0.7};
  std::vector<double> shifted = v;
  for (double& x : shifted) x += 3.7;
  EXPECT_NEAR(softmax_mean(shifted, 2.5), softmax_mean(v, 2.5) + 3.7, 1e-12);
}

TEST(MaskedSoftmaxMean, Examples) {
  EXPECT_NEAR(masked_softmax_mean(std::vector<double>{0.0, 1.0, 99.0}, ClientMask(3, {0, 1}), std::log(2.0)),
              2.0 / 3.0, 1e-15);
  const std::vector<double> v{1.5, -2.0, 0.25};
  EXPECT_EQ(masked_softmax_mean(v, ClientMask::full(3), 4.0), softmax_mean(v, 4.0));
  EXPECT_NEAR(masked_softmax_mean(std::vector<double>{7.0, 1.0, 7.0}, ClientMask(3, {0, 2}), 9.0), 7.0, 1e-15);
}

TEST(MaskedSoftmaxMean, EqualsSubvectorMeanBitwise) {
  auto rng = test_rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_vector(rng, 12, 3.0);
    std::vector<std::size_t> members, order(12);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < 12; ++i)
      if (rng.uniform() < 0.5) members.push_back(i);
    if (members.empty()) members.push_back(rng.below(12));
    std::vector<double> sub;
    for (std::size_t i : members) sub.push_back(v[i]);
    const double alpha = 100.0 * rng.uniform();
    EXPECT_EQ(masked_softmax_mean(v, ClientMask(12, members), alpha), softmax_mean(sub, alpha));
  }
}

TEST(MaxGapBound, Examples) {
  EXPECT_EQ(max_gap_bound(1, 3.0), 0.0);
  EXPECT_NEAR(max_gap_bound(20, 6400.0), 4.68e-4, 5e-7);
  const double eps_prime = 0.37;
  const std::size_t m = 10;
  EXPECT_NEAR(max_gap_bound(m, 2.0 * std::log(10.0) / eps_prime), eps_prime / 2.0, 1e-15);
  EXPECT_THROW(max_gap_bound(3, 0.0), invalid_argument);
  EXPECT_THROW(max_gap_bound(0, 1.0), invalid_argument);
}

TEST(SoftmaxProperties, RandomizedInvariants) {
  auto rng = test_rng(3);
  const double alphas[] = {0.0, 1.0, 6400.0, 1e8};
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.below(15);
    const auto v = random_vector(rng, n, 4.0);
    const double alpha = t % 2 == 0 ? alphas[t / 2 % 4] : 20.0 * rng.uniform();
    const auto w = softmax_weights(v, alpha);
    double sum = 0.0;
    for (double p : w.weights) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);

    const double C = 10.0 * (rng.uniform() - 0.5);
    std::vector<double> shifted = v;
    for (double& x : shifted) x += C;
    EXPECT_NEAR(softmax_mean(shifted, alpha) - softmax_mean(v, alpha), C, 1e-9 * (1.0 + std::abs(C)));

    const double scale = 3.0 * rng.uniform();
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= scale;
    const double lhs = softmax_mean(scaled, alpha), rhs = scale * softmax_mean(v, scale * alpha);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(rhs)));

    const double hotter = alpha + 5.0 * rng.uniform();
    EXPECT_GE(softmax_mean(v, hotter), softmax_mean(v, alpha) - 1e-12);

    if (alpha > 0.0) {
      const double gap = *std::max_element(v.begin(), v.end()) - softmax_mean(v, alpha);
      EXPECT_GE(gap, 0.0);
      if (n == 1)
        EXPECT_LE(gap, 1e-12);
      else
        EXPECT_LT(gap, max_gap_bound(n, alpha) + 1e-12);
    }
  }
}

TEST(SoftmaxProperties, DeviationBound) {
  auto rng = test_rng(4);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.below(10);
    const auto v = random_vector(rng, n, 2.0);
    const auto delta = random_vector(rng, n, 0.3 * rng.uniform());
    const double k = 0.01 + rng.uniform();
    const double alpha = std::log(static_cast<double>(n)) / k * (1.0 + rng.uniform());
    std::vector<double> noisy = v;
    for (std::size_t i = 0; i < n; ++i) noisy[i] += delta[i];
    const auto w = softmax_weights(noisy, alpha);
    const double cross = dot(w.weights, v);
    const double vmax = *std::max_element(v.begin(), v.end());
    EXPECT_LE(vmax - cross, 2.0 * norm_inf(delta) + k + 1e-12);
    EXPECT_LE(softmax_mean(noisy, alpha) - cross, norm_inf(delta) + 1e-12);
  }
}

TEST(FsdUniformSigma, Examples) {
  EXPECT_EQ(fsd_uniform_sigma(std::vector<double>(5, 2.0)), 0.0);
  EXPECT_EQ(fsd_uniform_sigma(std::vector<double>{0.0, 1.0}), 1.0);
  EXPECT_EQ(fsd_uniform_sigma(std::vector<double>{4.0}), 0.0);
  // (0, 1, 3): gaps 3/1 and 2/(2/3) -> 3.
  EXPECT_NEAR(fsd_uniform_sigma(std::vector<double>{3.0, 0.0, 1.0}), 3.0, 1e-15);
  // (0, 0, 3): gaps 3/1 and 3/(2/3).
  EXPECT_NEAR(fsd_uniform_sigma(std::vector<double>{0.0, 0.0, 3.0}), 4.5, 1e-12);
  EXPECT_THROW(fsd_uniform_sigma(std::vector<double>{}), invalid_argument);
}

TEST(FsdUniformSigma, DominatesRange) {
  auto rng = test_rng(5);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(20);
    const auto x = random_vector(rng, n, 5.0);
    const double top = *std::max_element(x.begin(), x.end());
    const double bottom = *std::min_element(x.begin(), x.end());
    EXPECT_GE(fsd_uniform_sigma(x), top - bottom);
    EXPECT_GE(fsd_minimal_sigma(x), fsd_uniform_sigma(x));
  }
}

// The scaled-gap value does not satisfy the empirical CDF condition: for
// x = (0, 1) it gives 1, yet half the mass of max(x) - X sits at 1.
TEST(FsdUniformSigma, CdfConditionCounterexample) {
  const std::vector<double> x{0.0, 1.0};
  EXPECT_EQ(fsd_uniform_sigma(x), 1.0);
  EXPECT_NEAR(fsd_cdf_violation(x, 1.0), 0.5, 1e-12);
  EXPECT_EQ(fsd_minimal_sigma(x), 2.0);
  EXPECT_LE(fsd_cdf_violation(x, 2.0), 0.0);
}

TEST(FsdMinimalSigma, SatisfiesCdfConditionAndIsTight) {
  auto rng = test_rng(5);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(20);
    const auto x = random_vector(rng, n, 5.0);
    const double sigma = fsd_minimal_sigma(x);
    EXPECT_LE(fsd_cdf_violation(x, sigma), 1e-12);
    if (sigma == 0.0) continue;
    // Just below sigma the condition breaks exactly at one of the gaps.
    const double top = *std::max_element(x.begin(), x.end());
    const double smaller = 0.999 * sigma;
    bool broken = false;
    for (double xi : x) {
      const double t = top - xi;
      double frac = 0.0;
      for (double xj : x) frac += (top - xj >= t) ? 1.0 : 0.0;
      frac /= static_cast<double>(n);
      broken = broken || frac > std::max(0.0, 1.0 - t / smaller);
    }
    EXPECT_TRUE(broken);
  }
}

TEST(FsdMinimalSigma, Examples) {
  EXPECT_EQ(fsd_minimal_sigma(std::vector<double>(4, 1.5)), 0.0);
  EXPECT_EQ(fsd_minimal_sigma(std::vector<double>{7.0}), 0.0);
  // (0, 1, 3): gaps 3/(2/3) and 2/(1/3) -> 6.
  EXPECT_NEAR(fsd_minimal_sigma(std::vector<double>{3.0, 0.0, 1.0}), 6.0, 1e-12);
}

TEST(BinomRatio, ExhaustiveUpToTwenty) {
  for (long n = 1; n <= 20; ++n)
    for (long np = 0; np <= n; ++np)
      for (long m = 0; m <= np; ++m) EXPECT_TRUE(binom_ratio_bound_holds(n, np, m)) << n << " " << np << " " << m;
  EXPECT_TRUE(binom_ratio_bound_holds(7, 7, 3));
  EXPECT_TRUE(binom_ratio_bound_holds(9, 4, 0));
}

TEST(BinomRatio, RejectsBadOrdering) {
  EXPECT_THROW(binom_ratio_bound_holds(5, 6, 2), invalid_argument);
  EXPECT_THROW(binom_ratio_bound_holds(5, 2, 3), invalid_argument);
  EXPECT_THROW(binom_ratio_bound_holds(0, 0, 0), invalid_argument);
}

TEST(Entropy, UniformAndPoint) {
  EXPECT_NEAR(entropy(WeightVector{{0.25, 0.25, 0.25, 0.25}}), std::log(4.0), 1e-15);
  EXPECT_EQ(entropy(WeightVector{{0.0, 1.0}}), 0.0);
}
