#pragma once

// Comparison methods sharing the switching method's round skeleton: same
// subset and batch streams, same E-step local solver and aggregation, so the
// cumulative gradient-evaluation axis is identical across methods.
//
//   penalty:     v = grad f_i + [G_hat > 0] rho grad g_i
//   primal-dual: v = grad f_i + lambda grad g_i,  lambda <- max(0, lambda + eta_d G_hat)
//
// The server forms u = sum p_i a_i + coef sum q_i b_i from each client's mean
// objective part a_i and constraint part b_i, i.e. the gradient of the softmax
// objective plus coef times the softmax constraint. G_hat is the same masked
// softmax-mean constraint estimate the switching method uses.

#include <algorithm>
#include <cstddef>

#include "fedswitch/round_common.hpp"

namespace fedswitch {

namespace detail {

struct CombinedDirection {
  ParamVector objective;   // mean of the objective subgradients along the local path
  ParamVector constraint;  // mean of the constraint subgradients (empty when coef == 0)
};

// E local steps along v = grad f + coef * grad g; the two parts are returned
// separately so the server can weight them by p and q respectively.
template <OracleSet P>
CombinedDirection combined_local_solver(const P& problem, std::size_t client, std::span<const double> w_k,
                                        double coef, const RunConfig& cfg, std::size_t round) {
  const std::size_t d = w_k.size();
  CombinedDirection out;
  if (coef == 0.0) {
    out.objective = local_direction(w_k, cfg.gamma, cfg.E, [&](std::size_t tau, std::span<const double> w,
                                                               std::span<double> v) {
      const auto fb = problem.draw_batch(client, Component::objective, cfg.batch_grad,
                                         grad_key(cfg, round, client, tau, Component::objective));
      problem.subgrad(client, Component::objective, w, fb, v);
    });
    return out;
  }
  out.objective.assign(d, 0.0);
  out.constraint.assign(d, 0.0);
  ParamVector gbuf(d, 0.0);
  local_direction(w_k, cfg.gamma, cfg.E, [&](std::size_t tau, std::span<const double> w, std::span<double> v) {
    const auto fb = problem.draw_batch(client, Component::objective, cfg.batch_grad,
                                       grad_key(cfg, round, client, tau, Component::objective));
    problem.subgrad(client, Component::objective, w, fb, v);
    const auto gb = problem.draw_batch(client, Component::constraint, cfg.batch_grad,
                                       grad_key(cfg, round, client, tau, Component::constraint));
    problem.subgrad(client, Component::constraint, w, gb, gbuf);
    for (std::size_t j = 0; j < d; ++j) {
      out.objective[j] += v[j];
      out.constraint[j] += gbuf[j];
      v[j] += coef * gbuf[j];
    }
  });
  const double steps = static_cast<double>(cfg.E);
  for (std::size_t j = 0; j < d; ++j) {
    out.objective[j] /= steps;
    out.constraint[j] /= steps;
  }
  return out;
}

template <OracleSet P>
RoundRecord combined_round(OptimizerState& state, const RunConfig& cfg, const P& problem, double coef,
                           const RoundEstimates& est, RoundRecord rec) {
  const std::size_t k = state.round;
  const auto parts = client_directions(est.mask, cfg.client_threads, [&](std::size_t i) {
    return combined_local_solver(problem, i, state.w, coef, cfg, k);
  });
  std::vector<ParamVector> fdirs, gdirs;
  for (const auto& c : parts) {
    fdirs.push_back(c.objective);
    gdirs.push_back(c.constraint);
  }
  rec.weight_entropy = entropy(est.p);
  ParamVector u = aggregate(est.mask, est.p, fdirs, state.w.size());
  if (coef != 0.0) axpy(coef, aggregate(est.mask, est.q, gdirs, state.w.size()), u);
  count_evaluations(state, cfg, rec);
  apply_update(state.w, u, cfg);
  ++state.round;
  return rec;
}

template <OracleSet P>
RoundRecord begin_round(OptimizerState& state, const RunConfig& cfg, const P& problem, RoundEstimates& est) {
  RoundRecord rec;
  rec.round = state.round;
  fill_exact(rec, state, cfg, problem);
  est = estimate_round(state, cfg, problem);
  record_estimates(rec, est);
  rec.indicator = !est.degenerate && est.g_hat <= cfg.switch_threshold();
  return rec;
}

}  // namespace detail

/// One round of the hinge-penalty baseline.
template <OracleSet P>
RoundRecord penalty_round(OptimizerState& state, const RunConfig& cfg, const P& problem) {
  if (!(cfg.rho >= 0.0)) throw invalid_argument("penalty_round: rho must be >= 0");
  RoundEstimates est;
  RoundRecord rec = detail::begin_round(state, cfg, problem, est);
  const double coef = (!est.degenerate && est.g_hat > 0.0) ? cfg.rho : 0.0;
  return detail::combined_round(state, cfg, problem, coef, est, std::move(rec));
}

/// One round of the projected primal-dual baseline with a single multiplier.
template <OracleSet P>
RoundRecord primal_dual_round(OptimizerState& state, DualState& dual, const RunConfig& cfg, const P& problem) {
  if (!(cfg.eta_dual > 0.0)) throw invalid_argument("primal_dual_round: eta_dual must be > 0");
  if (!(dual.lambda >= 0.0)) throw invalid_argument("primal_dual_round: lambda must be >= 0");
  RoundEstimates est;
  RoundRecord rec = detail::begin_round(state, cfg, problem, est);
  rec.lambda = dual.lambda;
  rec = detail::combined_round(state, cfg, problem, dual.lambda, est, std::move(rec));
  if (!est.degenerate) dual.lambda = std::max(0.0, dual.lambda + cfg.eta_dual * est.g_hat);
  return rec;
}

}  // namespace fedswitch
