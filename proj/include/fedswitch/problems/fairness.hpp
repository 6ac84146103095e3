#pragma once

// Fair classification: each client minimises binary cross-entropy of a
// predictive model subject to a demographic-parity cap
//   g_i(w) = | mean_{protected} pi(x; w) - mean_{unprotected} pi(x; w) |.
//
// Constraint batches are stratified: a draw of size B takes B samples from
// each subgroup so that every batch can evaluate both means.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/datasets.hpp"
#include "fedswitch/models.hpp"
#include "fedswitch/problems/oracle.hpp"
#include "fedswitch/sampling.hpp"

namespace fedswitch {

inline constexpr double kProbabilityClamp = 1e-12;

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

/// Negative mean log-likelihood of the labels over the batch.
inline double fair_objective(std::span<const double> w, std::span<const std::size_t> batch,
                             const ClientDataset& client, const PredictiveModel& model) {
  if (batch.empty()) throw invalid_argument("fair_objective: empty batch");
  double s = 0.0;
  for (std::size_t r : batch) {
    const double p = clamp_probability(model.forward(w, client.row(r)));
    s -= client.labels[r] == 1 ? std::log(p) : std::log1p(-p);
  }
  return s / static_cast<double>(batch.size());
}

inline void fair_objective_grad(std::span<const double> w, std::span<const std::size_t> batch,
                                const ClientDataset& client, const PredictiveModel& model,
                                std::span<double> out) {
  if (batch.empty()) throw invalid_argument("fair_objective_grad: empty batch");
  std::fill(out.begin(), out.end(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t r : batch) {
    const auto x = client.row(r);
    const double p = model.forward(w, x);
    // d/dz of the clamped loss: zero once the clamp is active.
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) continue;
    model.accumulate_backward(w, x, (p - client.labels[r]) * inv, out);
  }
}

namespace detail {

struct ParityTerms {
  double protected_mean = 0.0;
  double unprotected_mean = 0.0;
  std::vector<std::size_t> protected_rows;
  std::vector<std::size_t> unprotected_rows;
};

inline ParityTerms split_groups(std::span<const std::size_t> batch, const std::vector<bool>& is_protected,
                                const ClientDataset& client) {
  ParityTerms t;
  for (std::size_t r : batch) (is_protected[r] ? t.protected_rows : t.unprotected_rows).push_back(r);
  if (t.protected_rows.empty() || t.unprotected_rows.empty())
    throw invalid_configuration("client " + std::to_string(client.client_id) +
                                ": demographic parity needs both subgroups in the batch");
  return t;
}

inline std::vector<bool> protected_lookup(const ClientDataset& client) {
  std::vector<bool> lookup(client.size(), false);
  for (std::size_t r : client.protected_group) lookup[r] = true;
  return lookup;
}

}  // namespace detail

/// |Delta| with Delta = mean pi over protected rows - mean pi over unprotected rows.
inline double fair_constraint(std::span<const double> w, std::span<const std::size_t> batch,
                              const ClientDataset& client, const PredictiveModel& model) {
  auto t = detail::split_groups(batch, detail::protected_lookup(client), client);
  double sp = 0.0, su = 0.0;
  for (std::size_t r : t.protected_rows) sp += model.forward(w, client.row(r));
  for (std::size_t r : t.unprotected_rows) su += model.forward(w, client.row(r));
  return std::abs(sp / static_cast<double>(t.protected_rows.size()) -
                  su / static_cast<double>(t.unprotected_rows.size()));
}

/// sign(Delta) * grad Delta, with sign(0) = 0.
inline void fair_constraint_subgrad(std::span<const double> w, std::span<const std::size_t> batch,
                                    const ClientDataset& client, const PredictiveModel& model,
                                    std::span<double> out) {
  auto t = detail::split_groups(batch, detail::protected_lookup(client), client);
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> pp, pu;
  double sp = 0.0, su = 0.0;
  for (std::size_t r : t.protected_rows) sp += pp.emplace_back(model.forward(w, client.row(r)));
  for (std::size_t r : t.unprotected_rows) su += pu.emplace_back(model.forward(w, client.row(r)));
  const double np = static_cast<double>(t.protected_rows.size());
  const double nu = static_cast<double>(t.unprotected_rows.size());
  const double delta = sp / np - su / nu;
  if (delta == 0.0) return;
  const double sign = delta > 0.0 ? 1.0 : -1.0;
  for (std::size_t k = 0; k < t.protected_rows.size(); ++k)
    model.accumulate_backward(w, client.row(t.protected_rows[k]), sign * pp[k] * (1.0 - pp[k]) / np, out);
  for (std::size_t k = 0; k < t.unprotected_rows.size(); ++k)
    model.accumulate_backward(w, client.row(t.unprotected_rows[k]), -sign * pu[k] * (1.0 - pu[k]) / nu, out);
}

class FairnessProblem {
 public:
  FairnessProblem(std::vector<ClientDataset> clients, PredictiveModel model)
      : clients_(std::move(clients)), model_(model) {
    if (clients_.empty()) throw invalid_configuration("FairnessProblem: no clients");
    for (const auto& c : clients_) {
      if (c.cols != model_.input_dim())
        throw invalid_configuration("FairnessProblem: feature count does not match model input");
      if (c.protected_group.empty() || c.unprotected_group.empty())
        throw invalid_configuration("client " + std::to_string(c.client_id) +
                                    " has an empty protected or unprotected subgroup");
      all_rows_.emplace_back(c.size());
      std::iota(all_rows_.back().begin(), all_rows_.back().end(), std::size_t{0});
      lookup_.push_back(detail::protected_lookup(c));
    }
  }

  std::size_t num_clients() const { return clients_.size(); }
  std::size_t dimension() const { return model_.parameter_count(); }
  const PredictiveModel& model() const { return model_; }
  const ClientDataset& client(std::size_t i) const { return clients_.at(i); }

  std::vector<std::size_t> draw_batch(std::size_t i, Component c, std::size_t size,
                                      const RngStreamKey& key) const {
    SplitMix64 rng = make_stream(key);
    if (c == Component::objective) return sample_from(all_rows_[i], size, rng);
    auto batch = sample_from(clients_[i].protected_group, size, rng);
    auto rest = sample_from(clients_[i].unprotected_group, size, rng);
    batch.insert(batch.end(), rest.begin(), rest.end());
    return batch;
  }

  double value(std::size_t i, Component c, std::span<const double> w,
               std::span<const std::size_t> batch) const {
    return c == Component::objective ? fair_objective(w, batch, clients_[i], model_)
                                     : fair_constraint(w, batch, clients_[i], model_);
  }

  void subgrad(std::size_t i, Component c, std::span<const double> w,
               std::span<const std::size_t> batch, std::span<double> out) const {
    if (c == Component::objective)
      fair_objective_grad(w, batch, clients_[i], model_, out);
    else
      fair_constraint_subgrad(w, batch, clients_[i], model_, out);
  }

  double exact(std::size_t i, Component c, std::span<const double> w) const {
    return value(i, c, w, all_rows_[i]);
  }

  GroupSums constraint_sums(std::size_t i, std::span<const double> w,
                            std::span<const std::size_t> batch) const {
    GroupSums s;
    for (std::size_t r : batch) {
      const double p = model_.forward(w, clients_[i].row(r));
      if (lookup_[i][r]) {
        s.protected_sum += p;
        ++s.protected_count;
      } else {
        s.unprotected_sum += p;
        ++s.unprotected_count;
      }
    }
    return s;
  }

  ParamVector initial_point(const RngStreamKey& key) const { return model_.init_params(key); }

 private:
  std::vector<ClientDataset> clients_;
  PredictiveModel model_;
  std::vector<std::vector<std::size_t>> all_rows_;
  std::vector<std::vector<bool>> lookup_;
};

}  // namespace fedswitch
