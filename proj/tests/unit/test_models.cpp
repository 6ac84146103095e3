#include <gtest/gtest.h>

#include <cmath>

#include "fedswitch/models.hpp"
#include "test_support.hpp"

using namespace fedswitch;
using fedswitch::testing::numeric_gradient;
using fedswitch::testing::random_vector;
using fedswitch::testing::relative_error;
using fedswitch::testing::test_rng;

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
}

TEST(PredictiveModel, ZeroParametersGiveHalf) {
  const std::vector<double> x{0.4, -2.0, 7.0};
  for (const auto& model : {PredictiveModel::linear(3), PredictiveModel::mlp(3, 4)}) {
    const ParamVector zero(model.parameter_count(), 0.0);
    EXPECT_EQ(model.forward(zero, x), 0.5);
  }
}

TEST(PredictiveModel, LinearMatchesLogistic) {
  const auto model = PredictiveModel::linear(2);
  const std::vector<double> w{0.5, -1.5}, x{2.0, 1.0};
  EXPECT_EQ(model.forward(w, x), sigmoid(-0.5));
}

TEST(PredictiveModel, HandComputedTinyMlp) {
  const auto model = PredictiveModel::mlp(2, 2);
  MlpParams mp{{1.0, 0.0, 0.0, 1.0}, {0.0, -1.0}, {2.0, -3.0}, 0.5};
  const auto params = model.pack(mp);
  const std::vector<double> x{1.5, 0.5};
  // hidden pre-activations (1.5, -0.5) -> relu (1.5, 0); logit 0.5 + 2 * 1.5.
  EXPECT_EQ(model.logit(params, x), 3.5);
  EXPECT_NEAR(model.forward(params, x), 0.9706877692486436, 1e-15);
  const auto g = model.backward(params, x, 1.0);
  const std::vector<double> expected{2.0 * 1.5, 2.0 * 0.5, 0.0, 0.0, 2.0, 0.0, 1.5, 0.0, 1.0};
  EXPECT_EQ(g, expected);
}

TEST(PredictiveModel, ParameterCountAndPackRoundTrip) {
  const auto model = PredictiveModel::mlp(5, 3);
  EXPECT_EQ(model.parameter_count(), (5u + 1u) * 3u + 3u + 1u);
  const auto params = model.init_params({1, -1, -1, -1, Purpose::init, 0});
  EXPECT_EQ(params.size(), model.parameter_count());
  EXPECT_EQ(model.pack(model.unpack(params)), params);
  EXPECT_EQ(PredictiveModel::linear(30).parameter_count(), 30u);
}

TEST(PredictiveModel, InitWithinFanInBounds) {
  const auto model = PredictiveModel::mlp(16, 8);
  const auto mp = model.unpack(model.init_params({7, -1, -1, -1, Purpose::init, 0}));
  for (double v : mp.w1) EXPECT_LE(std::abs(v), 0.25);
  for (double v : mp.w2) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(8.0));
  EXPECT_EQ(model.init_params({7, -1, -1, -1, Purpose::init, 0}), model.init_params({7, -1, -1, -1, Purpose::init, 0}));
}

TEST(PredictiveModel, BackwardLinearAndZeroUpstream) {
  const auto model = PredictiveModel::linear(3);
  const std::vector<double> w{1.0, 2.0, 3.0}, x{0.5, -1.0, 4.0};
  EXPECT_EQ(model.backward(w, x, 2.0), (std::vector<double>{1.0, -2.0, 8.0}));
  const auto mlp = PredictiveModel::mlp(3, 4);
  const auto p = mlp.init_params({3, -1, -1, -1, Purpose::init, 0});
  EXPECT_EQ(mlp.backward(p, x, 0.0), ParamVector(p.size(), 0.0));
}

TEST(PredictiveModel, DimensionMismatchThrows) {
  const auto model = PredictiveModel::mlp(3, 2);
  const ParamVector p(model.parameter_count(), 0.1);
  EXPECT_THROW(model.forward(p, std::vector<double>{1.0, 2.0}), invalid_argument);
  EXPECT_THROW(model.forward(ParamVector(4, 0.0), std::vector<double>{1.0, 2.0, 3.0}), invalid_argument);
  EXPECT_THROW(PredictiveModel::mlp(3, 0), invalid_argument);
}

TEST(PredictiveModel, MlpGradientMatchesFiniteDifferences) {
  auto rng = test_rng(21);
  const auto model = PredictiveModel::mlp(6, 5);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const auto params = random_vector(rng, model.parameter_count(), 1.0);
    const auto x = random_vector(rng, 6, 2.0);
    // Skip points within finite-difference reach of a ReLU kink.
    const auto mp = model.unpack(params);
    bool near_kink = false;
    for (std::size_t j = 0; j < 5; ++j) {
      double a = mp.b1[j];
      for (std::size_t k = 0; k < 6; ++k) a += mp.w1[j * 6 + k] * x[k];
      near_kink = near_kink || std::abs(a) < 1e-3;
    }
    if (near_kink) continue;
    const double y = t % 2;
    auto loss = [&](std::span<const double> p) {
      const double z = model.logit(p, x);
      return y == 1 ? softplus(-z) : softplus(z);
    };
    const double upstream = model.forward(params, x) - y;
    const auto analytic = model.backward(params, x, upstream);
    EXPECT_LE(relative_error(analytic, numeric_gradient(loss, params)), 1e-4);
    ++checked;
  }
  EXPECT_GE(checked, 90);
}

TEST(PredictiveModel, RepeatedCallsBitIdentical) {
  const auto model = PredictiveModel::mlp(4, 3);
  const auto p = model.init_params({9, -1, -1, -1, Purpose::init, 0});
  const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
  EXPECT_EQ(model.forward(p, x), model.forward(p, x));
  EXPECT_EQ(model.backward(p, x, 0.7), model.backward(p, x, 0.7));
}
