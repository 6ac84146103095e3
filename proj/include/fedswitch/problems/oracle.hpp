#pragma once

// The oracle contract the optimizer runs against. A problem owns n clients;
// for each client and each component (objective f_i or constraint g_i) it can
// draw a data batch, evaluate the batch mean value and subgradient, and
// evaluate the exact (full local data) value used for metrics.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/rng.hpp"

namespace fedswitch {

template <class P>
concept OracleSet = requires(const P& p, std::size_t client, Component c,
                             std::span<const double> w, std::span<const std::size_t> batch,
                             std::span<double> out, std::size_t size, const RngStreamKey& key) {
  { p.num_clients() } -> std::convertible_to<std::size_t>;
  { p.dimension() } -> std::convertible_to<std::size_t>;
  { p.draw_batch(client, c, size, key) } -> std::same_as<std::vector<std::size_t>>;
  { p.value(client, c, w, batch) } -> std::convertible_to<double>;
  // Overwrites out with the batch-mean subgradient.
  { p.subgrad(client, c, w, batch, out) };
  { p.exact(client, c, w) } -> std::convertible_to<double>;
  { p.initial_point(key) } -> std::same_as<ParamVector>;
};

// Per-client subgroup prediction sums used when the server recomputes a
// pooled demographic-parity constraint.
struct GroupSums {
  double protected_sum = 0.0;
  std::size_t protected_count = 0;
  double unprotected_sum = 0.0;
  std::size_t unprotected_count = 0;
};

template <class P>
concept PooledConstraintOracle =
    OracleSet<P> && requires(const P& p, std::size_t client, std::span<const double> w,
                             std::span<const std::size_t> batch) {
      { p.constraint_sums(client, w, batch) } -> std::same_as<GroupSums>;
    };

/// |pooled protected mean - pooled unprotected mean| over the given clients.
inline double server_fair_constraint(std::span<const GroupSums> sums) {
  GroupSums total;
  for (const auto& s : sums) {
    total.protected_sum += s.protected_sum;
    total.protected_count += s.protected_count;
    total.unprotected_sum += s.unprotected_sum;
    total.unprotected_count += s.unprotected_count;
  }
  if (total.protected_count == 0 || total.unprotected_count == 0)
    throw invalid_round("server_fair_constraint: a subgroup is absent from every sampled client");
  return std::abs(total.protected_sum / static_cast<double>(total.protected_count) -
                  total.unprotected_sum / static_cast<double>(total.unprotected_count));
}

template <OracleSet P>
double max_exact(const P& problem, Component c, std::span<const double> w) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problem.num_clients(); ++i) m = std::max(m, problem.exact(i, c, w));
  return m;
}

}  // namespace fedswitch
