#pragma once

// Predictive models with hand-derived gradients. Parameters live in one flat
// ParamVector so the optimizer never needs to know the architecture.
//
// Flattened MLP layout (input width p, hidden width h):
//   [ W1 (h x p, row-major) | b1 (h) | w2 (h) | b2 (1) ]   d = (p+1)h + h + 1

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/rng.hpp"

namespace fedswitch {

enum class ModelKind { linear, mlp };

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct MlpParams {
  std::vector<double> w1;  // h x p
  std::vector<double> b1;  // h
  std::vector<double> w2;  // h
  double b2 = 0.0;
};

class PredictiveModel {
 public:
  static PredictiveModel linear(std::size_t input_dim) {
    return PredictiveModel(ModelKind::linear, input_dim, 0);
  }
  static PredictiveModel mlp(std::size_t input_dim, std::size_t hidden) {
    if (hidden == 0) throw invalid_argument("PredictiveModel: hidden width must be >= 1");
    return PredictiveModel(ModelKind::mlp, input_dim, hidden);
  }

  ModelKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }

  std::size_t parameter_count() const {
    if (kind_ == ModelKind::linear) return input_dim_;
    return (input_dim_ + 1) * hidden_ + hidden_ + 1;
  }

  double logit(std::span<const double> params, std::span<const double> x) const {
    check(params, x);
    if (kind_ == ModelKind::linear) return dot(params, x);
    const std::size_t p = input_dim_, h = hidden_;
    const double* w1 = params.data();
    const double* b1 = w1 + h * p;
    const double* w2 = b1 + h;
    double out = w2[h];
    for (std::size_t j = 0; j < h; ++j) {
      double a = b1[j];
      const double* row = w1 + j * p;
      for (std::size_t k = 0; k < p; ++k) a += row[k] * x[k];
      if (a > 0.0) out += w2[j] * a;
    }
    return out;
  }

  double forward(std::span<const double> params, std::span<const double> x) const {
    return sigmoid(logit(params, x));
  }

  /// grad += upstream * d(logit)/d(params). ReLU'(0) is taken as 0.
  void accumulate_backward(std::span<const double> params, std::span<const double> x,
                           double upstream, std::span<double> grad) const {
    check(params, x);
    if (grad.size() != params.size()) throw invalid_argument("backward: gradient size mismatch");
    if (upstream == 0.0) return;
    if (kind_ == ModelKind::linear) {
      axpy(upstream, x, grad);
      return;
    }
    const std::size_t p = input_dim_, h = hidden_;
    const double* w1 = params.data();
    const double* b1 = w1 + h * p;
    const double* w2 = b1 + h;
    double* g_w1 = grad.data();
    double* g_b1 = g_w1 + h * p;
    double* g_w2 = g_b1 + h;
    for (std::size_t j = 0; j < h; ++j) {
      double a = b1[j];
      const double* row = w1 + j * p;
      for (std::size_t k = 0; k < p; ++k) a += row[k] * x[k];
      if (a > 0.0) {
        g_w2[j] += upstream * a;
        const double back = upstream * w2[j];
        g_b1[j] += back;
        double* g_row = g_w1 + j * p;
        for (std::size_t k = 0; k < p; ++k) g_row[k] += back * x[k];
      }
    }
    g_w2[h] += upstream;
  }

  ParamVector backward(std::span<const double> params, std::span<const double> x,
                       double upstream) const {
    ParamVector g(params.size(), 0.0);
    accumulate_backward(params, x, upstream, g);
    return g;
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer from the given key.
  ParamVector init_params(const RngStreamKey& key) const {
    ParamVector params(parameter_count(), 0.0);
    SplitMix64 rng = make_stream(key);
    auto fill = [&rng](std::span<double> dst, std::size_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& v : dst) v = (2.0 * rng.uniform() - 1.0) * bound;
    };
    if (kind_ == ModelKind::linear) {
      fill(params, input_dim_);
    } else {
      const std::size_t p = input_dim_, h = hidden_;
      std::span<double> all(params);
      fill(all.subspan(0, h * p + h), p);
      fill(all.subspan(h * p + h, h + 1), h);
    }
    return params;
  }

  MlpParams unpack(std::span<const double> params) const {
    if (kind_ != ModelKind::mlp) throw invalid_argument("unpack: model is not an mlp");
    if (params.size() != parameter_count()) throw invalid_argument("unpack: size mismatch");
    const std::size_t p = input_dim_, h = hidden_;
    MlpParams out;
    out.w1.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(h * p));
    out.b1.assign(params.begin() + static_cast<std::ptrdiff_t>(h * p),
                  params.begin() + static_cast<std::ptrdiff_t>(h * p + h));
    out.w2.assign(params.begin() + static_cast<std::ptrdiff_t>(h * p + h),
                  params.begin() + static_cast<std::ptrdiff_t>(h * p + 2 * h));
    out.b2 = params.back();
    return out;
  }

  ParamVector pack(const MlpParams& mp) const {
    if (kind_ != ModelKind::mlp) throw invalid_argument("pack: model is not an mlp");
    const std::size_t p = input_dim_, h = hidden_;
    if (mp.w1.size() != h * p || mp.b1.size() != h || mp.w2.size() != h)
      throw invalid_argument("pack: layer shape mismatch");
    ParamVector out;
    out.reserve(parameter_count());
    out.insert(out.end(), mp.w1.begin(), mp.w1.end());
    out.insert(out.end(), mp.b1.begin(), mp.b1.end());
    out.insert(out.end(), mp.w2.begin(), mp.w2.end());
    out.push_back(mp.b2);
    return out;
  }

 private:
  PredictiveModel(ModelKind kind, std::size_t input_dim, std::size_t hidden)
      : kind_(kind), input_dim_(input_dim), hidden_(hidden) {
    if (input_dim == 0) throw invalid_argument("PredictiveModel: input dimension must be >= 1");
  }

  void check(std::span<const double> params, std::span<const double> x) const {
    if (x.size() != input_dim_)
      throw invalid_argument("model: feature dimension " + std::to_string(x.size()) +
                             " does not match input dimension " + std::to_string(input_dim_));
    if (params.size() != parameter_count())
      throw invalid_argument("model: parameter vector has wrong length");
  }

  ModelKind kind_;
  std::size_t input_dim_;
  std::size_t hidden_;
};

}  // namespace fedswitch
