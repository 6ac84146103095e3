#pragma once

// Neyman-Pearson classification: each client minimises its class-0 logistic
// loss subject to a cap on its class-1 logistic loss. Linear scorer, no bias.
//
//   phi(w; (x, y)) = -y w'x + log(1 + e^{w'x})

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/datasets.hpp"
#include "fedswitch/models.hpp"
#include "fedswitch/problems/oracle.hpp"
#include "fedswitch/sampling.hpp"

namespace fedswitch {

inline double logistic_loss(double margin, int label) {
  return label == 1 ? softplus(-margin) : softplus(margin);
}

namespace detail {

inline void require_class(const ClientDataset& client, int label) {
  const auto& set = label == 1 ? client.class1 : client.class0;
  if (set.empty())
    throw invalid_configuration("client " + std::to_string(client.client_id) + " has no class-" +
                                std::to_string(label) + " samples");
}

inline double logistic_batch_value(std::span<const double> w, std::span<const std::size_t> batch,
                                   const ClientDataset& client, int label) {
  require_class(client, label);
  if (batch.empty()) throw invalid_argument("logistic value: empty batch");
  double s = 0.0;
  for (std::size_t r : batch) s += logistic_loss(dot(w, client.row(r)), label);
  return s / static_cast<double>(batch.size());
}

}  // namespace detail

/// Mean class-0 logistic loss over the batch (indices into the client's rows).
inline double np_objective(std::span<const double> w, std::span<const std::size_t> batch,
                           const ClientDataset& client) {
  return detail::logistic_batch_value(w, batch, client, 0);
}

/// Mean class-1 logistic loss over the batch.
inline double np_constraint(std::span<const double> w, std::span<const std::size_t> batch,
                            const ClientDataset& client) {
  return detail::logistic_batch_value(w, batch, client, 1);
}

/// Mean of (sigmoid(w'x) - y) x over the batch, written into out.
inline void logistic_subgrad(std::span<const double> w, std::span<const std::size_t> batch,
                             const ClientDataset& client, int class_label, std::span<double> out) {
  detail::require_class(client, class_label);
  if (batch.empty()) throw invalid_argument("logistic_subgrad: empty batch");
  std::fill(out.begin(), out.end(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t r : batch) {
    const auto x = client.row(r);
    axpy((sigmoid(dot(w, x)) - class_label) * inv, x, out);
  }
}

inline ParamVector logistic_subgrad(std::span<const double> w, std::span<const std::size_t> batch,
                                    const ClientDataset& client, int class_label) {
  ParamVector g(w.size(), 0.0);
  logistic_subgrad(w, batch, client, class_label, g);
  return g;
}

class NeymanPearsonProblem {
 public:
  explicit NeymanPearsonProblem(std::vector<ClientDataset> clients) : clients_(std::move(clients)) {
    if (clients_.empty()) throw invalid_configuration("NeymanPearsonProblem: no clients");
    dim_ = clients_.front().cols;
    for (const auto& c : clients_) {
      if (c.cols != dim_) throw invalid_configuration("NeymanPearsonProblem: clients disagree on feature count");
      detail::require_class(c, 0);
      detail::require_class(c, 1);
    }
  }

  std::size_t num_clients() const { return clients_.size(); }
  std::size_t dimension() const { return dim_; }
  const ClientDataset& client(std::size_t i) const { return clients_.at(i); }

  std::vector<std::size_t> draw_batch(std::size_t i, Component c, std::size_t size,
                                      const RngStreamKey& key) const {
    SplitMix64 rng = make_stream(key);
    return sample_from(population(i, c), size, rng);
  }

  double value(std::size_t i, Component c, std::span<const double> w,
               std::span<const std::size_t> batch) const {
    return c == Component::objective ? np_objective(w, batch, clients_[i])
                                     : np_constraint(w, batch, clients_[i]);
  }

  void subgrad(std::size_t i, Component c, std::span<const double> w,
               std::span<const std::size_t> batch, std::span<double> out) const {
    logistic_subgrad(w, batch, clients_[i], c == Component::objective ? 0 : 1, out);
  }

  double exact(std::size_t i, Component c, std::span<const double> w) const {
    return value(i, c, w, population(i, c));
  }

  ParamVector initial_point(const RngStreamKey&) const { return ParamVector(dim_, 0.0); }

  const std::vector<std::size_t>& population(std::size_t i, Component c) const {
    return c == Component::objective ? clients_[i].class0 : clients_[i].class1;
  }

 private:
  std::vector<ClientDataset> clients_;
  std::size_t dim_ = 0;
};

}  // namespace fedswitch
