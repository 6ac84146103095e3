#pragma once

// Convex benchmark with a known solution.
//
//   f_i(w) = 1/2 |w - a_i|^2          g_i(w) = <c_i, w> - b_i
//
// The anchors a_i come in antipodal pairs c0 +/- r u (plus c0 itself when n is
// odd), so the minimiser of max_i f_i is c0 with value r^2/2. Offsets b_i are
// chosen so max_i g_i(c0) = -slack exactly: the constraint is inactive at the
// optimum and Slater's condition holds with margin slack. The default start
// point sits outside the feasible set.
//
// With noise > 0 each client holds samples_per_client noise draws, each
// adding <e, w> + o to f and <h, w> + t to g. The draws are centred over the
// client's samples so the full-data mean is exactly the noiseless function.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/problems/oracle.hpp"
#include "fedswitch/sampling.hpp"

namespace fedswitch {

enum class SyntheticConstraint {
  linear,             // Slater-feasible linear constraints described above
  always_feasible,    // g_i == -1
  always_infeasible,  // g_i == +1, zero subgradient
  unreachable,        // g_i(w) = <e, w> + offset, positive on the whole ball
};

struct SyntheticConfig {
  std::size_t n = 8;
  std::size_t d = 5;
  double noise = 0.0;
  double slack = 0.5;
  double radius = 4.0;  // Theta is the ball of this radius around the origin
  double spread = 1.0;  // anchor distance r from the centre
  std::size_t samples_per_client = 64;
  SyntheticConstraint constraint = SyntheticConstraint::linear;
  std::uint64_t seed = 1;

  friend bool operator==(const SyntheticConfig&, const SyntheticConfig&) = default;
};

struct SyntheticSample {
  ParamVector f_shift;  // e
  double f_offset = 0.0;
  ParamVector g_shift;  // h
  double g_offset = 0.0;
};

class SyntheticProblem {
 public:
  explicit SyntheticProblem(const SyntheticConfig& cfg) : cfg_(cfg) { build(); }

  const SyntheticConfig& config() const { return cfg_; }
  std::size_t num_clients() const { return cfg_.n; }
  std::size_t dimension() const { return cfg_.d; }

  const ParamVector& optimum() const { return w_star_; }
  double optimal_value() const { return f_star_; }
  const ParamVector& start() const { return w0_; }
  const std::vector<ParamVector>& anchors() const { return anchors_; }
  const std::vector<ParamVector>& constraint_normals() const { return normals_; }
  const std::vector<double>& constraint_offsets() const { return offsets_; }
  /// Lipschitz constant of every f_i, g_i (including sample noise) on Theta.
  double lipschitz() const { return lipschitz_; }
  /// Diameter of Theta.
  double diameter() const { return 2.0 * cfg_.radius; }

  double objective_max(std::span<const double> w) const { return max_exact(*this, Component::objective, w); }
  double constraint_max(std::span<const double> w) const { return max_exact(*this, Component::constraint, w); }

  std::vector<std::size_t> draw_batch(std::size_t, Component, std::size_t size,
                                      const RngStreamKey& key) const {
    return sample_batch(samples_.front().size(), size, key);
  }

  double value(std::size_t i, Component c, std::span<const double> w,
               std::span<const std::size_t> batch) const {
    if (batch.empty()) throw invalid_argument("synthetic value: empty batch");
    const double base = exact(i, c, w);
    if (cfg_.noise == 0.0) return base;
    double s = 0.0;
    for (std::size_t b : batch) {
      const auto& smp = samples_[i][b];
      s += c == Component::objective ? dot(smp.f_shift, w) + smp.f_offset
                                     : (has_noisy_constraint() ? dot(smp.g_shift, w) + smp.g_offset : 0.0);
    }
    return base + s / static_cast<double>(batch.size());
  }

  void subgrad(std::size_t i, Component c, std::span<const double> w,
               std::span<const std::size_t> batch, std::span<double> out) const {
    if (batch.empty()) throw invalid_argument("synthetic subgrad: empty batch");
    exact_grad(i, c, w, out);
    if (cfg_.noise == 0.0) return;
    if (c == Component::constraint && !has_noisy_constraint()) return;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t b : batch) {
      const auto& smp = samples_[i][b];
      axpy(inv, c == Component::objective ? smp.f_shift : smp.g_shift, out);
    }
  }

  double exact(std::size_t i, Component c, std::span<const double> w) const {
    if (w.size() != cfg_.d) throw invalid_argument("synthetic: dimension mismatch");
    if (c == Component::objective) {
      double s = 0.0;
      for (std::size_t j = 0; j < cfg_.d; ++j) {
        const double diff = w[j] - anchors_[i][j];
        s += diff * diff;
      }
      return 0.5 * s;
    }
    switch (cfg_.constraint) {
      case SyntheticConstraint::always_feasible: return -1.0;
      case SyntheticConstraint::always_infeasible: return 1.0;
      default: return dot(normals_[i], w) - offsets_[i];
    }
  }

  ParamVector initial_point(const RngStreamKey&) const { return w0_; }

 private:
  bool has_noisy_constraint() const {
    return cfg_.constraint == SyntheticConstraint::linear || cfg_.constraint == SyntheticConstraint::unreachable;
  }

  void exact_grad(std::size_t i, Component c, std::span<const double> w, std::span<double> out) const {
    if (c == Component::objective) {
      for (std::size_t j = 0; j < cfg_.d; ++j) out[j] = w[j] - anchors_[i][j];
      return;
    }
    if (!has_noisy_constraint()) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    std::copy(normals_[i].begin(), normals_[i].end(), out.begin());
  }

  static ParamVector random_unit(SplitMix64& rng, std::size_t d) {
    ParamVector u(d);
    double nrm = 0.0;
    while (nrm < 1e-12) {
      for (double& x : u) x = rng.normal();
      nrm = norm2(u);
    }
    for (double& x : u) x /= nrm;
    return u;
  }

  void build() {
    if (cfg_.n == 0 || cfg_.d == 0) throw invalid_argument("make_synthetic: need n >= 1 and d >= 1");
    if (!(cfg_.noise >= 0.0)) throw invalid_argument("make_synthetic: noise must be >= 0");
    if (!(cfg_.slack > 0.0)) throw invalid_argument("make_synthetic: slack must be > 0");
    if (!(cfg_.radius > 0.0) || !(cfg_.spread >= 0.0))
      throw invalid_argument("make_synthetic: radius must be > 0 and spread >= 0");
    if (cfg_.noise > 0.0 && cfg_.samples_per_client < 2)
      throw invalid_argument("make_synthetic: noisy instances need at least 2 samples per client");
    const double R = cfg_.radius;
    // Start point c0 + 0.6 R e must lie in Theta and violate the constraint:
    // 0.6 R > slack + max extra offset (= slack) after the 0.5 normal tilt.
    if (cfg_.constraint == SyntheticConstraint::linear && 0.6 * R * 0.5 <= 2.0 * cfg_.slack)
      throw invalid_argument("make_synthetic: radius too small for the requested slack (need 0.15 R > slack)");

    SplitMix64 rng = make_stream({cfg_.seed, RngStreamKey::kNone, RngStreamKey::kNone, RngStreamKey::kNone,
                                  Purpose::synthetic, 0});
    const std::size_t n = cfg_.n, d = cfg_.d;

    const ParamVector center_dir = random_unit(rng, d);
    w_star_.assign(d, 0.0);
    axpy(0.2 * R, center_dir, w_star_);

    anchors_.clear();
    for (std::size_t k = 0; k + 1 < n; k += 2) {
      const ParamVector u = random_unit(rng, d);
      ParamVector plus = w_star_, minus = w_star_;
      axpy(cfg_.spread, u, plus);
      axpy(-cfg_.spread, u, minus);
      anchors_.push_back(std::move(plus));
      anchors_.push_back(std::move(minus));
    }
    if (n % 2 == 1) anchors_.push_back(w_star_);
    f_star_ = n >= 2 ? 0.5 * cfg_.spread * cfg_.spread : 0.0;

    // Constraint normals: common unit direction e tilted per client, each
    // normalised, with <c_i, e> >= 0.5.
    const ParamVector e = random_unit(rng, d);
    normals_.assign(n, ParamVector(d, 0.0));
    offsets_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ParamVector c = e;
      if (cfg_.constraint == SyntheticConstraint::linear) {
        const ParamVector tilt = random_unit(rng, d);
        axpy(0.5, tilt, c);
        const double nrm = norm2(c);
        for (double& x : c) x /= nrm;
      }
      normals_[i] = std::move(c);
      const double extra = (i == 0 || cfg_.constraint != SyntheticConstraint::linear) ? 0.0 : cfg_.slack * rng.uniform();
      offsets_[i] = cfg_.constraint == SyntheticConstraint::unreachable ? -(R + 1.0)
                                                                       : dot(normals_[i], w_star_) + cfg_.slack + extra;
    }

    w0_ = w_star_;
    axpy(0.6 * R, e, w0_);

    samples_.assign(n, {});
    const std::size_t per_client = cfg_.noise > 0.0 ? cfg_.samples_per_client : 1;
    double max_shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& smp = samples_[i];
      smp.assign(per_client, SyntheticSample{ParamVector(d, 0.0), 0.0, ParamVector(d, 0.0), 0.0});
      if (cfg_.noise == 0.0) continue;
      for (auto& s : smp) {
        for (double& x : s.f_shift) x = cfg_.noise * rng.normal();
        s.f_offset = cfg_.noise * rng.normal();
        for (double& x : s.g_shift) x = cfg_.noise * rng.normal();
        s.g_offset = cfg_.noise * rng.normal();
      }
      // Centre so that the client's sample mean is exactly zero noise.
      ParamVector mf(d, 0.0), mg(d, 0.0);
      double of = 0.0, og = 0.0;
      const double inv = 1.0 / static_cast<double>(per_client);
      for (const auto& s : smp) {
        axpy(inv, s.f_shift, mf);
        axpy(inv, s.g_shift, mg);
        of += s.f_offset * inv;
        og += s.g_offset * inv;
      }
      for (auto& s : smp) {
        axpy(-1.0, mf, s.f_shift);
        axpy(-1.0, mg, s.g_shift);
        s.f_offset -= of;
        s.g_offset -= og;
        max_shift = std::max({max_shift, norm2(s.f_shift), norm2(s.g_shift)});
      }
    }

    double max_anchor = 0.0;
    for (const auto& a : anchors_) max_anchor = std::max(max_anchor, norm2(a));
    lipschitz_ = std::max(R + max_anchor, 1.0) + max_shift;
  }

  SyntheticConfig cfg_;
  ParamVector w_star_;
  double f_star_ = 0.0;
  ParamVector w0_;
  std::vector<ParamVector> anchors_;
  std::vector<ParamVector> normals_;
  std::vector<double> offsets_;
  std::vector<std::vector<SyntheticSample>> samples_;
  double lipschitz_ = 1.0;
};

inline SyntheticProblem make_synthetic(const SyntheticConfig& cfg) { return SyntheticProblem(cfg); }

}  // namespace fedswitch
