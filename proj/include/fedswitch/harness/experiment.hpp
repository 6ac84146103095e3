#pragma once

// Experiment execution: builds the problem for each (sweep point, seed),
// runs the configured algorithm and writes
//   <out>/<point>/seed_<s>.jsonl        header + one record per round
//   <out>/<point>/seed_<s>.result.json  metrics of the output point w_bar
//   <out>/<point>/summary.json          across-seed statistics
//   <out>/summary.json                  all points

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "fedswitch/datasets.hpp"
#include "fedswitch/harness/config.hpp"
#include "fedswitch/harness/metrics.hpp"
#include "fedswitch/models.hpp"
#include "fedswitch/optimizer.hpp"
#include "fedswitch/problems/fairness.hpp"
#include "fedswitch/problems/neyman_pearson.hpp"
#include "fedswitch/problems/synthetic.hpp"

namespace fedswitch::harness {

using AnyProblem = std::variant<NeymanPearsonProblem, FairnessProblem, SyntheticProblem>;

struct BuiltProblem {
  AnyProblem problem;
  Table test;
  json info = json::object();
};

inline RngStreamKey data_key(std::uint64_t seed, Purpose purpose) {
  return {seed, RngStreamKey::kNone, RngStreamKey::kNone, RngStreamKey::kNone, purpose, 0};
}

/// Loads, splits, standardises and partitions the data of one run.
inline BuiltProblem build_problem(const ExperimentConfig& c, std::uint64_t seed) {
  const std::size_t n = c.run.n;
  if (c.problem == ProblemKind::synthetic) {
    SyntheticConfig s = c.synthetic;
    s.n = n;
    SyntheticProblem p(s);
    json info{{"dimension", p.dimension()}, {"optimal_value", p.optimal_value()}};
    return {std::move(p), Table{}, std::move(info)};
  }

  const Table all = load_csv(c.data.path, c.data.schema);
  auto [train, test] = split_train_test(all, c.data.train_fraction, data_key(seed, Purpose::data_split));
  if (c.data.standardize) {
    const Standardizer st = Standardizer::fit(train);
    st.apply(train);
    st.apply(test);
  }
  json info{{"rows", all.rows},
            {"dropped_rows", all.dropped_rows},
            {"train_rows", train.rows},
            {"test_rows", test.rows},
            {"features", all.cols}};

  if (c.problem == ProblemKind::np) {
    const Stratum by[] = {Stratum::label};
    auto clients = iid_partition(train, n, data_key(seed, Purpose::data_partition), by);
    NeymanPearsonProblem p(std::move(clients));
    info["dimension"] = p.dimension();
    return {std::move(p), std::move(test), std::move(info)};
  }

  const Stratum by[] = {Stratum::label, Stratum::protected_attribute};
  auto clients = iid_partition(train, n, data_key(seed, Purpose::data_partition), by);
  const PredictiveModel model = c.model.kind == ModelKind::linear ? PredictiveModel::linear(train.cols)
                                                                  : PredictiveModel::mlp(train.cols, c.model.hidden);
  FairnessProblem p(std::move(clients), model);
  info["dimension"] = p.dimension();
  return {std::move(p), std::move(test), std::move(info)};
}

// --- held-out metrics ------------------------------------------------------

inline json test_metrics(const NeymanPearsonProblem&, const Table& test, std::span<const double> w) {
  double loss0 = 0.0, loss1 = 0.0;
  std::size_t n0 = 0, n1 = 0, err0 = 0, err1 = 0;
  for (std::size_t r = 0; r < test.rows; ++r) {
    const double margin = dot(w, test.row(r));
    if (test.labels[r] == 1) {
      loss1 += logistic_loss(margin, 1);
      err1 += margin <= 0.0;
      ++n1;
    } else {
      loss0 += logistic_loss(margin, 0);
      err0 += margin > 0.0;
      ++n0;
    }
  }
  auto ratio = [](double a, std::size_t b) { return b == 0 ? 0.0 : a / static_cast<double>(b); };
  return json{{"objective", ratio(loss0, n0)},
              {"constraint", ratio(loss1, n1)},
              {"type_I_error", ratio(static_cast<double>(err0), n0)},
              {"type_II_error", ratio(static_cast<double>(err1), n1)}};
}

inline json test_metrics(const FairnessProblem& p, const Table& test, std::span<const double> w) {
  double bce = 0.0, prot = 0.0, unprot = 0.0;
  std::size_t np = 0, nu = 0, correct = 0;
  for (std::size_t r = 0; r < test.rows; ++r) {
    const double pi = sigmoid(p.model().logit(w, test.row(r)));
    const int y = test.labels[r];
    bce -= y == 1 ? std::log(fedswitch::clamp_probability(pi)) : std::log(fedswitch::clamp_probability(1.0 - pi));
    correct += (pi > 0.5) == (y == 1);
    if (!test.is_protected.empty() && test.is_protected[r]) {
      prot += pi;
      ++np;
    } else {
      unprot += pi;
      ++nu;
    }
  }
  const double rows = test.rows == 0 ? 1.0 : static_cast<double>(test.rows);
  const double parity = (np == 0 || nu == 0) ? 0.0 : std::abs(prot / static_cast<double>(np) - unprot / static_cast<double>(nu));
  return json{{"objective", bce / rows}, {"demographic_parity", parity}, {"accuracy", static_cast<double>(correct) / rows}};
}

inline json test_metrics(const SyntheticProblem& p, const Table&, std::span<const double> w) {
  return json{{"objective_gap", p.objective_max(w) - p.optimal_value()}, {"constraint", p.constraint_max(w)}};
}

// --- one run ---------------------------------------------------------------

struct SeedOutcome {
  std::string point;
  std::uint64_t seed = 0;
  double F_exact = 0.0;  // at w_bar
  double G_exact = 0.0;
  double kappa = 0.0;
  std::size_t violation_rounds = 0;
  std::size_t grad_evals = 0;
  bool empty_S = false;
};

inline std::string seed_stem(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

/// Runs one sweep point for one seed and writes its metrics and result files.
inline SeedOutcome run_single(const SweepPoint& pt, std::uint64_t seed, const std::filesystem::path& out_dir) {
  const ExperimentConfig cfg = resolved_for_seed(pt, seed);
  const BuiltProblem built = build_problem(cfg, seed);
  const std::filesystem::path dir = out_dir / pt.label;

  return std::visit(
      [&](const auto& problem) {
        RunConfig rc = cfg.run;
        rc.keep_trajectory = false;
        const RunResult res = run(rc, problem);

        JsonlWriter writer(dir / (seed_stem(seed) + ".jsonl"));
        writer.write(json{{"type", "header"},
                          {"schema_version", kSchemaVersion},
                          {"artifact_version", kArtifactVersion},
                          {"experiment", cfg.name},
                          {"point", pt.label},
                          {"axes", pt.axes},
                          {"seed", seed},
                          {"problem_info", built.info},
                          {"config", config_to_json(cfg)}});
        SeedOutcome o;
        o.point = pt.label;
        o.seed = seed;
        for (const RoundRecord& r : res.history) {
          writer.write(round_to_json(r));
          if (r.G_exact > rc.epsilon) ++o.violation_rounds;
        }
        writer.commit();

        o.F_exact = max_exact(problem, Component::objective, res.w_bar);
        o.G_exact = max_exact(problem, Component::constraint, res.w_bar);
        o.kappa = res.kappa;
        o.empty_S = res.empty_S;
        o.grad_evals = res.history.empty() ? 0 : res.history.back().grad_evals;
        write_json_file(dir / (seed_stem(seed) + ".result.json"),
                        json{{"schema_version", kSchemaVersion},
                             {"point", pt.label},
                             {"seed", seed},
                             {"algorithm", to_string(rc.algorithm)},
                             {"F_exact", o.F_exact},
                             {"G_exact", o.G_exact},
                             {"kappa", o.kappa},
                             {"empty_S", o.empty_S},
                             {"violation_rounds", o.violation_rounds},
                             {"grad_evals", o.grad_evals},
                             {"lambda_final", res.lambda_final},
                             {"test", test_metrics(problem, built.test, res.w_bar)},
                             {"w_bar", res.w_bar}});
        return o;
      },
      built.problem);
}

// --- sweep -----------------------------------------------------------------

struct RunOptions {
  std::filesystem::path out_dir;
  std::size_t parallel = 1;
  std::ostream* log = nullptr;
};

inline json point_summary(const SweepPoint& pt, const std::vector<SeedOutcome>& seeds) {
  std::vector<double> F, G, kappa, viol, evals;
  json per_seed = json::array();
  for (const auto& s : seeds) {
    F.push_back(s.F_exact);
    G.push_back(s.G_exact);
    kappa.push_back(s.kappa);
    viol.push_back(static_cast<double>(s.violation_rounds));
    evals.push_back(static_cast<double>(s.grad_evals));
    per_seed.push_back({{"seed", s.seed},
                        {"F_exact", s.F_exact},
                        {"G_exact", s.G_exact},
                        {"kappa", s.kappa},
                        {"violation_rounds", s.violation_rounds},
                        {"grad_evals", s.grad_evals},
                        {"empty_S", s.empty_S}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"point", pt.label},
              {"axes", pt.axes},
              {"F_exact", stat_to_json(describe(F))},
              {"G_exact", stat_to_json(describe(G))},
              {"kappa", stat_to_json(describe(kappa))},
              {"violation_rounds", stat_to_json(describe(viol))},
              {"grad_evals", stat_to_json(describe(evals))},
              {"seeds", per_seed}};
}

/// Runs every (point, seed) job, optionally on several threads, then writes
/// the summaries. The first failure is rethrown after all workers stop.
inline json run_experiment(const ExperimentConfig& config, const RunOptions& opts) {
  const std::vector<SweepPoint> points = expand_sweep(config);
  const std::vector<std::uint64_t>& seeds = config.seeds;
  const std::size_t jobs = points.size() * seeds.size();
  if (opts.log)
    *opts.log << "sweep: " << points.size() << " point(s) x " << seeds.size() << " seed(s) = " << jobs
              << " run(s)\n";

  std::vector<SeedOutcome> outcomes(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const SweepPoint& pt = points[j / seeds.size()];
      const std::uint64_t seed = seeds[j % seeds.size()];
      try {
        outcomes[j] = run_single(pt, seed, opts.out_dir);
        std::lock_guard lock(mu);
        if (opts.log) *opts.log << "done " << pt.label << " seed " << seed << '\n';
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opts.parallel, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  json all = json::object();
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<SeedOutcome> per(outcomes.begin() + static_cast<std::ptrdiff_t>(p * seeds.size()),
                                 outcomes.begin() + static_cast<std::ptrdiff_t>((p + 1) * seeds.size()));
    json s = point_summary(points[p], per);
    write_json_file(opts.out_dir / points[p].label / "summary.json", s);
    all[points[p].label] = std::move(s);
  }
  write_json_file(opts.out_dir / "summary.json", json{{"experiment", config.name}, {"points", all}});
  return all;
}

/// Writes the generated synthetic instance (anchors, constraints, optimum).
inline json synthetic_instance(const ExperimentConfig& c) {
  SyntheticConfig s = c.synthetic;
  s.n = c.run.n;
  const SyntheticProblem p(s);
  return json{{"n", s.n},
              {"d", s.d},
              {"radius", s.radius},
              {"constraint", to_string(s.constraint)},
              {"seed", s.seed},
              {"optimum", p.optimum()},
              {"optimal_value", p.optimal_value()},
              {"start", p.start()},
              {"anchors", p.anchors()},
              {"constraint_normals", p.constraint_normals()},
              {"constraint_offsets", p.constraint_offsets()},
              {"lipschitz", p.lipschitz()},
              {"diameter", p.diameter()}};
}

}  // namespace fedswitch::harness
