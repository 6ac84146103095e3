#pragma once

// Softmax-weighted switching gradient method with partial participation and
// local updates, plus the two full-participation special cases written out as
// their own code paths (single update per round, and E local updates).
//
// Each round k:
//   sample I_k (|I_k| = m); each i in I_k evaluates f_i, g_i on a fresh value
//   batch; p_k, q_k = masked softmax of alpha f, alpha g; G_hat = <q_k, g>;
//   indicator = G_hat <= epsilon / switch_divisor (k joins S when set);
//   each i in I_k returns its local direction u_i; u = sum (p or q)_i u_i;
//   w_{k+1} = w_k - eta u.
// Output: the average of w_k over k in S (w_K when S is empty).

#include <cstddef>
#include <utility>

#include "fedswitch/baselines.hpp"
#include "fedswitch/round_common.hpp"

namespace fedswitch {

/// One round of the switching method.
template <OracleSet P>
RoundRecord global_round(OptimizerState& state, const RunConfig& cfg, const P& problem) {
  RoundRecord rec;
  rec.round = state.round;
  fill_exact(rec, state, cfg, problem);

  const RoundEstimates est = estimate_round(state, cfg, problem);
  record_estimates(rec, est);

  // A degenerate pooled round cannot certify feasibility: it takes an
  // objective step but stays out of S.
  const bool objective_step = est.degenerate || est.g_hat <= cfg.switch_threshold();
  rec.indicator = !est.degenerate && objective_step;
  if (rec.indicator) {
    add_to_S(state);
    rec.in_S = true;
  }

  const std::size_t k = state.round;
  const auto dirs = client_directions(est.mask, cfg.client_threads, [&](std::size_t i) {
    return local_solver(problem, i, state.w, objective_step, cfg, k);
  });
  const WeightVector& weights = objective_step ? est.p : est.q;
  rec.weight_entropy = entropy(weights);
  const ParamVector u = aggregate(est.mask, weights, dirs, state.w.size());

  count_evaluations(state, cfg, rec);
  apply_update(state.w, u, cfg);
  ++state.round;
  return rec;
}

namespace detail {

inline void finish(RunResult& result, OptimizerState& state, const RunConfig& cfg) {
  result.w_final = state.w;
  result.S = state.S;
  result.empty_S = state.S.empty();
  result.kappa = cfg.K == 0 ? 0.0 : static_cast<double>(state.S.size()) / static_cast<double>(cfg.K);
  if (result.empty_S || cfg.algorithm != Algorithm::switching) {
    result.w_bar = state.w;
  } else {
    result.w_bar = state.w_sum_S;
    const double inv = 1.0 / static_cast<double>(state.S.size());
    for (double& x : result.w_bar) x *= inv;
  }
}

template <OracleSet P>
OptimizerState initial_state(const RunConfig& cfg, const P& problem) {
  cfg.validate();
  if (cfg.n != problem.num_clients())
    throw invalid_argument("run: config n = " + std::to_string(cfg.n) + " but problem has " +
                           std::to_string(problem.num_clients()) + " clients");
  OptimizerState state;
  state.w = problem.initial_point(init_key(cfg));
  if (state.w.size() != problem.dimension()) throw invalid_argument("run: initial point has wrong dimension");
  if (cfg.projection_radius > 0.0) project_to_ball(state.w, cfg.projection_radius);
  return state;
}

}  // namespace detail

/// Runs K rounds of the configured algorithm. For the baselines, w_bar is the
/// last iterate and S still records the rounds that passed the switching test.
template <OracleSet P>
RunResult run(const RunConfig& cfg, const P& problem) {
  OptimizerState state = detail::initial_state(cfg, problem);
  DualState dual{cfg.lambda0};
  RunResult result;
  result.history.reserve(cfg.K);
  if (cfg.keep_trajectory) result.trajectory.push_back(state.w);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    RoundRecord rec;
    switch (cfg.algorithm) {
      case Algorithm::switching: rec = global_round(state, cfg, problem); break;
      case Algorithm::penalty: rec = penalty_round(state, cfg, problem); break;
      case Algorithm::primal_dual: rec = primal_dual_round(state, dual, cfg, problem); break;
    }
    if (cfg.algorithm != Algorithm::switching && rec.indicator) {
      state.S.push_back(rec.round);
      rec.in_S = true;
    }
    result.history.push_back(std::move(rec));
    if (cfg.keep_trajectory) result.trajectory.push_back(state.w);
  }
  result.lambda_final = dual.lambda;
  detail::finish(result, state, cfg);
  return result;
}

/// Full participation, one local update per round: every client evaluates
/// values and one gradient batch at w_k; the update direction is the softmax-
/// weighted sum of the batch gradients.
template <OracleSet P>
RunResult run_full_participation_single_update(const RunConfig& cfg, const P& problem) {
  if (cfg.m != cfg.n || cfg.E != 1)
    throw invalid_argument("run_full_participation_single_update: needs m == n and E == 1");
  if (cfg.algorithm != Algorithm::switching || cfg.pooled_constraint)
    throw invalid_argument("run_full_participation_single_update: plain switching method only");
  OptimizerState state = detail::initial_state(cfg, problem);
  const std::size_t n = cfg.n, d = state.w.size();
  RunResult result;
  if (cfg.keep_trajectory) result.trajectory.push_back(state.w);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    RoundRecord rec;
    rec.round = k;
    fill_exact(rec, state, cfg, problem);
    std::vector<double> f(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto fb = problem.draw_batch(i, Component::objective, cfg.batch_value,
                                         value_key(cfg, k, i, Component::objective));
      const auto gb = problem.draw_batch(i, Component::constraint, cfg.batch_value,
                                         value_key(cfg, k, i, Component::constraint));
      f[i] = problem.value(i, Component::objective, state.w, fb);
      g[i] = problem.value(i, Component::constraint, state.w, gb);
    }
    const WeightVector p = softmax_weights(f, cfg.alpha);
    const WeightVector q = softmax_weights(g, cfg.alpha);
    const double G = dot(q.weights, g);
    const bool feasible = G <= cfg.switch_threshold();
    rec.g_hat = rec.g_softmax = G;
    rec.indicator = rec.in_S = feasible;
    if (feasible) add_to_S(state);

    const Component c = feasible ? Component::objective : Component::constraint;
    std::vector<ParamVector> grads(n, ParamVector(d, 0.0));
    std::vector<const ParamVector*> ptrs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto batch = problem.draw_batch(i, c, cfg.batch_grad, grad_key(cfg, k, i, 0, c));
      problem.subgrad(i, c, state.w, batch, grads[i]);
      ptrs[i] = &grads[i];
    }
    const WeightVector& weights = feasible ? p : q;
    const ParamVector u = weighted_pairwise_sum(weights.weights, ptrs, d);
    count_evaluations(state, cfg, rec);
    apply_update(state.w, u, cfg);
    ++state.round;
    result.history.push_back(std::move(rec));
    if (cfg.keep_trajectory) result.trajectory.push_back(state.w);
  }
  detail::finish(result, state, cfg);
  return result;
}

/// Full participation with E local updates per round: the same as the general
/// method without subset sampling or masking.
template <OracleSet P>
RunResult run_full_participation_local_updates(const RunConfig& cfg, const P& problem) {
  if (cfg.m != cfg.n) throw invalid_argument("run_full_participation_local_updates: needs m == n");
  if (cfg.algorithm != Algorithm::switching || cfg.pooled_constraint)
    throw invalid_argument("run_full_participation_local_updates: plain switching method only");
  OptimizerState state = detail::initial_state(cfg, problem);
  const std::size_t n = cfg.n, d = state.w.size();
  RunResult result;
  if (cfg.keep_trajectory) result.trajectory.push_back(state.w);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    RoundRecord rec;
    rec.round = k;
    fill_exact(rec, state, cfg, problem);
    std::vector<double> f(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto fb = problem.draw_batch(i, Component::objective, cfg.batch_value,
                                         value_key(cfg, k, i, Component::objective));
      const auto gb = problem.draw_batch(i, Component::constraint, cfg.batch_value,
                                         value_key(cfg, k, i, Component::constraint));
      f[i] = problem.value(i, Component::objective, state.w, fb);
      g[i] = problem.value(i, Component::constraint, state.w, gb);
    }
    const WeightVector p = softmax_weights(f, cfg.alpha);
    const WeightVector q = softmax_weights(g, cfg.alpha);
    const double G = dot(q.weights, g);
    const bool feasible = G <= cfg.switch_threshold();
    rec.g_hat = rec.g_softmax = G;
    rec.indicator = rec.in_S = feasible;
    if (feasible) add_to_S(state);

    std::vector<ParamVector> dirs(n);
    std::vector<const ParamVector*> ptrs(n);
    for (std::size_t i = 0; i < n; ++i) {
      dirs[i] = local_solver(problem, i, state.w, feasible, cfg, k);
      ptrs[i] = &dirs[i];
    }
    const WeightVector& weights = feasible ? p : q;
    const ParamVector u = weighted_pairwise_sum(weights.weights, ptrs, d);
    count_evaluations(state, cfg, rec);
    apply_update(state.w, u, cfg);
    ++state.round;
    result.history.push_back(std::move(rec));
    if (cfg.keep_trajectory) result.trajectory.push_back(state.w);
  }
  detail::finish(result, state, cfg);
  return result;
}

}  // namespace fedswitch
