#pragma once

// Machinery shared by every federated method: run configuration, per-round
// telemetry, the server-side value estimation step, the client local solver
// and the deterministic aggregation of client directions.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/problems/oracle.hpp"
#include "fedswitch/rng.hpp"
#include "fedswitch/sampling.hpp"
#include "fedswitch/softmax.hpp"

namespace fedswitch {

enum class Algorithm { switching, penalty, primal_dual };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::switching: return "switching";
    case Algorithm::penalty: return "penalty";
    case Algorithm::primal_dual: return "primal_dual";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "switching") return Algorithm::switching;
  if (s == "penalty") return Algorithm::penalty;
  if (s == "primal_dual") return Algorithm::primal_dual;
  throw invalid_argument("unknown algorithm '" + s + "' (expected switching, penalty or primal_dual)");
}

struct RunConfig {
  std::size_t K = 100;  // global rounds
  std::size_t E = 1;    // local steps per round
  std::size_t n = 1;    // clients
  std::size_t m = 1;    // participants per round
  double eta = 0.1;     // global step
  double gamma = 0.1;   // local step
  double epsilon = 0.1;
  double switch_divisor = 2.0;  // objective step iff estimate <= epsilon / switch_divisor
  double alpha = 1.0;           // softmax temperature
  std::size_t batch_value = 32;  // B_zeta
  std::size_t batch_grad = 32;   // B_g
  std::uint64_t run_seed = 0;
  Algorithm algorithm = Algorithm::switching;
  double rho = 1.0;       // penalty weight
  double lambda0 = 0.0;   // initial multiplier
  double eta_dual = 0.01;
  double projection_radius = 0.0;  // > 0 projects w onto the ball of this radius
  bool pooled_constraint = false;  // server recomputes the constraint from pooled group sums
  bool track_exact = true;         // evaluate full-data F and G at every iterate
  bool keep_trajectory = false;
  std::size_t client_threads = 1;

  double switch_threshold() const { return epsilon / switch_divisor; }

  void validate() const {
    auto fail = [](const std::string& msg) { throw invalid_argument("RunConfig: " + msg); };
    if (m < 1 || m > n) fail("need 1 <= m <= n");
    if (E < 1) fail("E must be >= 1");
    if (!(eta > 0.0)) fail("eta must be > 0");
    if (!(gamma > 0.0)) fail("gamma must be > 0");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (!(switch_divisor > 1.0)) fail("switch_divisor must be > 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be finite and >= 0");
    if (batch_value < 1 || batch_grad < 1) fail("batch sizes must be >= 1");
    if (!(projection_radius >= 0.0)) fail("projection_radius must be >= 0");
    if (algorithm == Algorithm::penalty && !(rho >= 0.0)) fail("rho must be >= 0");
    if (algorithm == Algorithm::primal_dual) {
      if (!(eta_dual > 0.0)) fail("eta_dual must be > 0");
      if (!(lambda0 >= 0.0)) fail("lambda0 must be >= 0");
    }
    if (client_threads < 1) fail("client_threads must be >= 1");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<std::size_t> sampled;
  double g_hat = 0.0;           // constraint estimate used by the switching test
  double g_softmax = 0.0;       // masked softmax mean of the batch constraint values
  double g_batch_max = 0.0;     // hard max of the batch constraint values over the subset
  double f_softmax = 0.0;
  bool indicator = false;       // g_hat <= epsilon / switch_divisor
  bool in_S = false;
  bool degenerate = false;      // pooled constraint could not be formed
  double F_exact = 0.0;         // max_i f_i(w_k) on full local data
  double G_exact = 0.0;
  std::size_t grad_evals = 0;   // cumulative, m * E * B_g per round
  std::size_t value_evals = 0;  // cumulative, 2 * m * B_zeta per round
  double weight_entropy = 0.0;  // of the aggregation weights
  double lambda = 0.0;          // multiplier used this round (primal-dual only)
};

struct OptimizerState {
  ParamVector w;
  std::size_t round = 0;
  std::size_t grad_evals = 0;
  std::size_t value_evals = 0;
  std::vector<std::size_t> S;
  ParamVector w_sum_S;
};

struct DualState {
  double lambda = 0.0;
};

struct RunResult {
  ParamVector w_bar;
  ParamVector w_final;
  std::vector<std::size_t> S;
  std::vector<RoundRecord> history;
  std::vector<ParamVector> trajectory;  // w_0 .. w_K when keep_trajectory
  double kappa = 0.0;
  bool empty_S = true;
  double lambda_final = 0.0;
};

// --- stream keys -----------------------------------------------------------

inline RngStreamKey subset_key(const RunConfig& cfg, std::size_t k) {
  return {cfg.run_seed, static_cast<std::int64_t>(k), RngStreamKey::kNone, RngStreamKey::kNone, Purpose::subset, 0};
}

inline RngStreamKey value_key(const RunConfig& cfg, std::size_t k, std::size_t client, Component c) {
  return {cfg.run_seed, static_cast<std::int64_t>(k), static_cast<std::int64_t>(client), RngStreamKey::kNone,
          Purpose::value_batch, static_cast<std::uint8_t>(c)};
}

inline RngStreamKey grad_key(const RunConfig& cfg, std::size_t k, std::size_t client, std::size_t step,
                             Component c) {
  return {cfg.run_seed, static_cast<std::int64_t>(k), static_cast<std::int64_t>(client),
          static_cast<std::int64_t>(step), Purpose::grad_batch, static_cast<std::uint8_t>(c)};
}

inline RngStreamKey init_key(const RunConfig& cfg) {
  return {cfg.run_seed, RngStreamKey::kNone, RngStreamKey::kNone, RngStreamKey::kNone, Purpose::init, 0};
}

// --- server-side estimation -------------------------------------------------

struct RoundEstimates {
  ClientMask mask;
  std::vector<double> f;  // batch values, length n, zero outside the mask
  std::vector<double> g;
  WeightVector p;         // masked softmax of alpha f
  WeightVector q;         // masked softmax of alpha g
  double g_softmax = 0.0;
  double f_softmax = 0.0;
  double g_batch_max = 0.0;
  double g_hat = 0.0;
  bool degenerate = false;
};

/// Samples the round's subset, evaluates every participant's batch values and
/// forms the softmax weights and the constraint estimate.
template <OracleSet P>
RoundEstimates estimate_round(const OptimizerState& state, const RunConfig& cfg, const P& problem) {
  const std::size_t n = problem.num_clients();
  RoundEstimates est;
  est.mask = sample_subset(n, cfg.m, subset_key(cfg, state.round));
  est.f.assign(n, 0.0);
  est.g.assign(n, 0.0);
  std::vector<GroupSums> sums;
  for (std::size_t i : est.mask.members()) {
    const auto fb = problem.draw_batch(i, Component::objective, cfg.batch_value,
                                       value_key(cfg, state.round, i, Component::objective));
    const auto gb = problem.draw_batch(i, Component::constraint, cfg.batch_value,
                                       value_key(cfg, state.round, i, Component::constraint));
    est.f[i] = problem.value(i, Component::objective, state.w, fb);
    est.g[i] = problem.value(i, Component::constraint, state.w, gb);
    if constexpr (PooledConstraintOracle<P>) {
      if (cfg.pooled_constraint) sums.push_back(problem.constraint_sums(i, state.w, gb));
    }
  }
  est.p = masked_softmax(est.f, est.mask, cfg.alpha);
  est.q = masked_softmax(est.g, est.mask, cfg.alpha);
  est.f_softmax = masked_softmax_mean(est.f, est.mask, cfg.alpha);
  est.g_softmax = masked_softmax_mean(est.g, est.mask, cfg.alpha);
  est.g_batch_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i : est.mask.members()) est.g_batch_max = std::max(est.g_batch_max, est.g[i]);
  est.g_hat = est.g_softmax;
  if constexpr (PooledConstraintOracle<P>) {
    if (cfg.pooled_constraint) {
      try {
        est.g_hat = server_fair_constraint(sums);
      } catch (const invalid_round&) {
        est.degenerate = true;
      }
    }
  }
  return est;
}

// --- client side ------------------------------------------------------------

/// Runs E local steps w <- w - gamma * v_tau and returns the normalised
/// displacement (w_0 - w_E) / (gamma E). The displacement telescopes to the
/// mean of the v_tau, which is what is accumulated; with E = 1 the result is
/// exactly v_0. grad(step, w, out) writes v_step.
template <class GradFn>
ParamVector local_direction(std::span<const double> w_k, double gamma, std::size_t E, GradFn&& grad) {
  if (!(gamma > 0.0)) throw invalid_argument("local_solver: gamma must be > 0");
  if (E < 1) throw invalid_argument("local_solver: E must be >= 1");
  const std::size_t d = w_k.size();
  ParamVector w(w_k.begin(), w_k.end());
  ParamVector v(d, 0.0);
  ParamVector sum(d, 0.0);
  for (std::size_t tau = 0; tau < E; ++tau) {
    grad(tau, std::span<const double>(w), std::span<double>(v));
    for (std::size_t j = 0; j < d; ++j) {
      sum[j] += v[j];
      w[j] -= gamma * v[j];
    }
  }
  const double steps = static_cast<double>(E);
  for (double& s : sum) s /= steps;
  return sum;
}

/// Switching local solver for one client: objective subgradients when the
/// broadcast indicator is set, constraint subgradients otherwise, each on a
/// fresh batch of size B_g.
template <OracleSet P>
ParamVector local_solver(const P& problem, std::size_t client, std::span<const double> w_k, bool indicator,
                         const RunConfig& cfg, std::size_t round) {
  const Component c = indicator ? Component::objective : Component::constraint;
  return local_direction(w_k, cfg.gamma, cfg.E, [&](std::size_t tau, std::span<const double> w, std::span<double> out) {
    const auto batch = problem.draw_batch(client, c, cfg.batch_grad, grad_key(cfg, round, client, tau, c));
    problem.subgrad(client, c, w, batch, out);
  });
}

/// Computes one direction per participant, optionally on a thread pool, and
/// returns them in ascending client order.
template <class DirFn>
auto client_directions(const ClientMask& mask, std::size_t threads, DirFn&& dir) {
  const auto& members = mask.members();
  std::vector<std::invoke_result_t<DirFn&, std::size_t>> out(members.size());
  if (threads <= 1 || members.size() <= 1) {
    for (std::size_t k = 0; k < members.size(); ++k) out[k] = dir(members[k]);
    return out;
  }
  const std::size_t workers = std::min(threads, members.size());
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < members.size(); k += workers) out[k] = dir(members[k]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// sum over participants (ascending index) of weight_i * direction_i.
inline ParamVector aggregate(const ClientMask& mask, const WeightVector& weights,
                             const std::vector<ParamVector>& directions, std::size_t dim) {
  std::vector<double> w;
  std::vector<const ParamVector*> dirs;
  w.reserve(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    w.push_back(weights[mask.members()[k]]);
    dirs.push_back(&directions[k]);
  }
  return weighted_pairwise_sum(w, dirs, dim);
}

/// w <- w - eta u, followed by the optional ball projection.
inline void apply_update(ParamVector& w, const ParamVector& u, const RunConfig& cfg) {
  for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.eta * u[j];
  if (cfg.projection_radius > 0.0) project_to_ball(w, cfg.projection_radius);
}

template <OracleSet P>
void fill_exact(RoundRecord& rec, const OptimizerState& state, const RunConfig& cfg, const P& problem) {
  if (!cfg.track_exact) return;
  rec.F_exact = max_exact(problem, Component::objective, state.w);
  rec.G_exact = max_exact(problem, Component::constraint, state.w);
}

inline void record_estimates(RoundRecord& rec, const RoundEstimates& est) {
  rec.sampled = est.mask.members();
  rec.g_hat = est.g_hat;
  rec.g_softmax = est.g_softmax;
  rec.g_batch_max = est.g_batch_max;
  rec.f_softmax = est.f_softmax;
  rec.degenerate = est.degenerate;
}

inline void count_evaluations(OptimizerState& state, const RunConfig& cfg, RoundRecord& rec) {
  state.grad_evals += cfg.m * cfg.E * cfg.batch_grad;
  state.value_evals += 2 * cfg.m * cfg.batch_value;
  rec.grad_evals = state.grad_evals;
  rec.value_evals = state.value_evals;
}

inline void add_to_S(OptimizerState& state) {
  state.S.push_back(state.round);
  if (state.w_sum_S.empty()) state.w_sum_S.assign(state.w.size(), 0.0);
  for (std::size_t j = 0; j < state.w.size(); ++j) state.w_sum_S[j] += state.w[j];
}

}  // namespace fedswitch
