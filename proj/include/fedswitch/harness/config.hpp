#pragma once

// Experiment configuration: a JSON document holding the run parameters, the
// problem and data description, sweep axes and seeds. Unknown keys and type
// mismatches are rejected with the dotted path of the offending entry.
//
// Sweep expansion order: cases x algorithm x alpha x E x participation.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedswitch/datasets.hpp"
#include "fedswitch/models.hpp"
#include "fedswitch/problems/synthetic.hpp"
#include "fedswitch/round_common.hpp"

namespace fedswitch::harness {

using json = nlohmann::json;

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { np, fair, synthetic };
enum class GammaRule { fixed, eta_over_E };

struct DataConfig {
  std::string path;
  CsvSchema schema;
  double train_fraction = 0.8;
  bool standardize = true;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ModelConfig {
  ModelKind kind = ModelKind::linear;
  std::size_t hidden = 64;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct SweepCase {
  std::string label;
  json set = json::object();  // dotted key -> value

  friend bool operator==(const SweepCase&, const SweepCase&) = default;
};

struct SweepConfig {
  std::vector<SweepCase> cases;
  std::vector<Algorithm> algorithm;
  std::vector<double> alpha;
  std::vector<std::size_t> E;
  std::vector<double> participation;

  bool empty() const {
    return cases.empty() && algorithm.empty() && alpha.empty() && E.empty() && participation.empty();
  }
  std::size_t size() const {
    auto at_least_one = [](std::size_t s) { return s == 0 ? std::size_t{1} : s; };
    return at_least_one(cases.size()) * at_least_one(algorithm.size()) * at_least_one(alpha.size()) *
           at_least_one(E.size()) * at_least_one(participation.size());
  }

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemKind problem = ProblemKind::synthetic;
  RunConfig run;
  double participation = 0.0;  // > 0 sets m = round(participation * n)
  GammaRule gamma_rule = GammaRule::fixed;
  std::map<std::string, double> eta_by_algorithm;
  DataConfig data;
  ModelConfig model;
  SyntheticConfig synthetic;
  SweepConfig sweep;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// --- enum names ------------------------------------------------------------

inline std::string to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::np: return "np";
    case ProblemKind::fair: return "fair";
    case ProblemKind::synthetic: return "synthetic";
  }
  return "?";
}

inline std::string to_string(GammaRule g) { return g == GammaRule::fixed ? "fixed" : "eta_over_E"; }
inline std::string to_string(ModelKind k) { return k == ModelKind::linear ? "linear" : "mlp"; }

inline std::string to_string(SyntheticConstraint c) {
  switch (c) {
    case SyntheticConstraint::linear: return "linear";
    case SyntheticConstraint::always_feasible: return "always_feasible";
    case SyntheticConstraint::always_infeasible: return "always_infeasible";
    case SyntheticConstraint::unreachable: return "unreachable";
  }
  return "?";
}

/// Compact number text for labels: integers without a fraction, otherwise
/// the shortest round-trip form.
inline std::string format_number(double x) {
  if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 1e15)
    return std::to_string(static_cast<long long>(x));
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// --- reading ---------------------------------------------------------------

namespace detail {

inline std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void read_value(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw config_error(path + ": expected a number");
  out = j.get<double>();
}

inline void read_value(const json& j, const std::string& path, std::uint64_t& out) {
  if (j.is_number_unsigned()) {
    out = j.get<std::uint64_t>();
    return;
  }
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(j.get<std::int64_t>());
    return;
  }
  if (j.is_number_float() && j.get<double>() >= 0.0 && j.get<double>() == std::floor(j.get<double>())) {
    out = static_cast<std::uint64_t>(j.get<double>());
    return;
  }
  throw config_error(path + ": expected a non-negative integer");
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t and uint64_t share one reader");

inline void read_value(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw config_error(path + ": expected true or false");
  out = j.get<bool>();
}

inline void read_value(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw config_error(path + ": expected a string");
  out = j.get<std::string>();
}

template <class E>
void read_enum(const json& j, const std::string& path, E& out, std::initializer_list<E> options) {
  std::string s;
  read_value(j, path, s);
  std::string names;
  for (E e : options) {
    if (to_string(e) == s) {
      out = e;
      return;
    }
    names += (names.empty() ? "" : ", ") + to_string(e);
  }
  throw config_error(path + ": unknown value '" + s + "' (expected one of " + names + ")");
}

inline void read_value(const json& j, const std::string& path, Algorithm& out) {
  read_enum(j, path, out, {Algorithm::switching, Algorithm::penalty, Algorithm::primal_dual});
}
inline void read_value(const json& j, const std::string& path, ProblemKind& out) {
  read_enum(j, path, out, {ProblemKind::np, ProblemKind::fair, ProblemKind::synthetic});
}
inline void read_value(const json& j, const std::string& path, GammaRule& out) {
  read_enum(j, path, out, {GammaRule::fixed, GammaRule::eta_over_E});
}
inline void read_value(const json& j, const std::string& path, ModelKind& out) {
  read_enum(j, path, out, {ModelKind::linear, ModelKind::mlp});
}
inline void read_value(const json& j, const std::string& path, SyntheticConstraint& out) {
  read_enum(j, path, out,
            {SyntheticConstraint::linear, SyntheticConstraint::always_feasible,
             SyntheticConstraint::always_infeasible, SyntheticConstraint::unreachable});
}

template <class T>
void read_value(const json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) throw config_error(path + ": expected a list");
  out.clear();
  for (std::size_t k = 0; k < j.size(); ++k) {
    T v{};
    read_value(j[k], path + "[" + std::to_string(k) + "]", v);
    out.push_back(std::move(v));
  }
}

inline void read_value(const json& j, const std::string& path, std::optional<std::string>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  std::string s;
  read_value(j, path, s);
  out = s;
}

// Reads the listed keys of one object and rejects anything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error((path_.empty() ? "<root>" : path_) + ": expected an object");
  }

  template <class T>
  ObjectReader& opt(const std::string& key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read_value(*it, join_path(path_, key), out);
    return *this;
  }

  template <class Fn>
  ObjectReader& sub(const std::string& key, Fn&& fn) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) fn(*it, join_path(path_, key));
    return *this;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error(join_path(path_, it.key()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_run(const json& j, const std::string& path, RunConfig& r) {
  ObjectReader(j, path)
      .opt("K", r.K)
      .opt("E", r.E)
      .opt("n", r.n)
      .opt("m", r.m)
      .opt("eta", r.eta)
      .opt("gamma", r.gamma)
      .opt("epsilon", r.epsilon)
      .opt("switch_divisor", r.switch_divisor)
      .opt("alpha", r.alpha)
      .opt("batch_value", r.batch_value)
      .opt("batch_grad", r.batch_grad)
      .opt("run_seed", r.run_seed)
      .opt("algorithm", r.algorithm)
      .opt("rho", r.rho)
      .opt("lambda0", r.lambda0)
      .opt("eta_dual", r.eta_dual)
      .opt("projection_radius", r.projection_radius)
      .opt("pooled_constraint", r.pooled_constraint)
      .opt("track_exact", r.track_exact)
      .opt("client_threads", r.client_threads)
      .finish();
}

inline void read_data(const json& j, const std::string& path, DataConfig& d) {
  CsvSchema& s = d.schema;
  ObjectReader(j, path)
      .opt("path", d.path)
      .opt("train_fraction", d.train_fraction)
      .opt("standardize", d.standardize)
      .opt("label_column", s.label_column)
      .opt("positive_label", s.positive_label)
      .opt("numeric_columns", s.numeric_columns)
      .sub("categorical_columns",
           [&](const json& arr, const std::string& p) {
             if (!arr.is_array()) throw config_error(p + ": expected a list");
             s.categorical_columns.clear();
             for (std::size_t k = 0; k < arr.size(); ++k) {
               CategoricalColumn c;
               const std::string item = p + "[" + std::to_string(k) + "]";
               ObjectReader(arr[k], item).opt("name", c.name).opt("categories", c.categories).finish();
               s.categorical_columns.push_back(std::move(c));
             }
           })
      .opt("ignore_columns", s.ignore_columns)
      .opt("protected_column", s.protected_column)
      .opt("protected_values", s.protected_values)
      .opt("missing_token", s.missing_token)
      .opt("has_header", s.has_header)
      .opt("column_names", s.column_names)
      .finish();
}

inline void read_synthetic(const json& j, const std::string& path, SyntheticConfig& s) {
  ObjectReader(j, path)
      .opt("d", s.d)
      .opt("noise", s.noise)
      .opt("slack", s.slack)
      .opt("radius", s.radius)
      .opt("spread", s.spread)
      .opt("samples_per_client", s.samples_per_client)
      .opt("constraint", s.constraint)
      .opt("seed", s.seed)
      .finish();
}

inline void read_sweep(const json& j, const std::string& path, SweepConfig& s) {
  ObjectReader(j, path)
      .sub("cases",
           [&](const json& arr, const std::string& p) {
             if (!arr.is_array()) throw config_error(p + ": expected a list");
             s.cases.clear();
             for (std::size_t k = 0; k < arr.size(); ++k) {
               SweepCase c;
               const std::string item = p + "[" + std::to_string(k) + "]";
               ObjectReader(arr[k], item)
                   .opt("label", c.label)
                   .sub("set",
                        [&](const json& set, const std::string& sp) {
                          if (!set.is_object()) throw config_error(sp + ": expected an object");
                          c.set = set;
                        })
                   .finish();
               if (c.label.empty()) throw config_error(item + ".label: must be non-empty");
               s.cases.push_back(std::move(c));
             }
           })
      .opt("algorithm", s.algorithm)
      .opt("alpha", s.alpha)
      .opt("E", s.E)
      .opt("participation", s.participation)
      .finish();
}

}  // namespace detail

/// Parses a configuration tree. Absent keys keep their defaults.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  detail::ObjectReader(j, "")
      .opt("name", c.name)
      .opt("problem", c.problem)
      .sub("run", [&](const json& v, const std::string& p) { detail::read_run(v, p, c.run); })
      .opt("participation", c.participation)
      .opt("gamma_rule", c.gamma_rule)
      .sub("eta_by_algorithm",
           [&](const json& v, const std::string& p) {
             if (!v.is_object()) throw config_error(p + ": expected an object");
             c.eta_by_algorithm.clear();
             for (auto it = v.begin(); it != v.end(); ++it) {
               Algorithm a{};
               detail::read_value(json(it.key()), detail::join_path(p, it.key()), a);
               double eta = 0.0;
               detail::read_value(it.value(), detail::join_path(p, it.key()), eta);
               c.eta_by_algorithm[to_string(a)] = eta;
             }
           })
      .sub("data", [&](const json& v, const std::string& p) { detail::read_data(v, p, c.data); })
      .sub("model",
           [&](const json& v, const std::string& p) {
             detail::ObjectReader(v, p).opt("kind", c.model.kind).opt("hidden", c.model.hidden).finish();
           })
      .sub("synthetic", [&](const json& v, const std::string& p) { detail::read_synthetic(v, p, c.synthetic); })
      .sub("sweep", [&](const json& v, const std::string& p) { detail::read_sweep(v, p, c.sweep); })
      .opt("seeds", c.seeds)
      .opt("output_dir", c.output_dir)
      .finish();
  c.synthetic.n = c.run.n;
  return c;
}

inline json run_to_json(const RunConfig& r) {
  return json{{"K", r.K},
              {"E", r.E},
              {"n", r.n},
              {"m", r.m},
              {"eta", r.eta},
              {"gamma", r.gamma},
              {"epsilon", r.epsilon},
              {"switch_divisor", r.switch_divisor},
              {"alpha", r.alpha},
              {"batch_value", r.batch_value},
              {"batch_grad", r.batch_grad},
              {"run_seed", r.run_seed},
              {"algorithm", to_string(r.algorithm)},
              {"rho", r.rho},
              {"lambda0", r.lambda0},
              {"eta_dual", r.eta_dual},
              {"projection_radius", r.projection_radius},
              {"pooled_constraint", r.pooled_constraint},
              {"track_exact", r.track_exact},
              {"client_threads", r.client_threads}};
}

inline json config_to_json(const ExperimentConfig& c) {
  const CsvSchema& s = c.data.schema;
  json cats = json::array();
  for (const auto& cat : s.categorical_columns) cats.push_back({{"name", cat.name}, {"categories", cat.categories}});
  json cases = json::array();
  for (const auto& sc : c.sweep.cases) cases.push_back({{"label", sc.label}, {"set", sc.set}});
  json algs = json::array();
  for (Algorithm a : c.sweep.algorithm) algs.push_back(to_string(a));
  return json{
      {"name", c.name},
      {"problem", to_string(c.problem)},
      {"run", run_to_json(c.run)},
      {"participation", c.participation},
      {"gamma_rule", to_string(c.gamma_rule)},
      {"eta_by_algorithm", c.eta_by_algorithm},
      {"data",
       {{"path", c.data.path},
        {"train_fraction", c.data.train_fraction},
        {"standardize", c.data.standardize},
        {"label_column", s.label_column},
        {"positive_label", s.positive_label},
        {"numeric_columns", s.numeric_columns},
        {"categorical_columns", cats},
        {"ignore_columns", s.ignore_columns},
        {"protected_column", s.protected_column ? json(*s.protected_column) : json(nullptr)},
        {"protected_values", s.protected_values},
        {"missing_token", s.missing_token},
        {"has_header", s.has_header},
        {"column_names", s.column_names}}},
      {"model", {{"kind", to_string(c.model.kind)}, {"hidden", c.model.hidden}}},
      {"synthetic",
       {{"d", c.synthetic.d},
        {"noise", c.synthetic.noise},
        {"slack", c.synthetic.slack},
        {"radius", c.synthetic.radius},
        {"spread", c.synthetic.spread},
        {"samples_per_client", c.synthetic.samples_per_client},
        {"constraint", to_string(c.synthetic.constraint)},
        {"seed", c.synthetic.seed}}},
      {"sweep",
       {{"cases", cases},
        {"algorithm", algs},
        {"alpha", c.sweep.alpha},
        {"E", c.sweep.E},
        {"participation", c.sweep.participation}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir}};
}

// --- overrides -------------------------------------------------------------

/// Sets tree[dotted.key] = value, creating intermediate objects.
inline void set_dotted(json& tree, const std::string& key, const json& value) {
  if (key.empty()) throw config_error("override: empty key");
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw config_error("override '" + key + "': empty path component");
    if (!node->is_object()) throw config_error("override '" + key + "': '" + part + "' is not inside an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

/// key=value; the value is read as JSON when it parses, otherwise as text.
inline void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_dotted(tree, key, value);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error(path + ": cannot open config file");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw config_error(path + ": " + e.what());
  }
}

/// Loads a config file, applies overrides, and resolves a relative data path
/// against the config file's directory.
inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  json tree = read_json_file(path);
  if (!tree.is_object()) throw config_error(path + ": top level must be an object");
  for (const auto& o : overrides) apply_override(tree, o);
  ExperimentConfig c;
  try {
    c = config_from_json(tree);
  } catch (const config_error& e) {
    throw config_error(path + ": " + e.what());
  }
  if (!c.data.path.empty()) {
    std::filesystem::path p(c.data.path);
    if (p.is_relative()) c.data.path = (std::filesystem::path(path).parent_path() / p).lexically_normal().string();
  }
  return c;
}

// --- sweep expansion -------------------------------------------------------

struct SweepPoint {
  std::string label;
  json axes = json::object();
  ExperimentConfig config;  // resolved: no sweep, run fields final
};

namespace detail {

inline std::size_t resolve_m(double participation, std::size_t n) {
  const auto m = static_cast<std::size_t>(std::llround(participation * static_cast<double>(n)));
  return std::max<std::size_t>(1, std::min(m, n));
}

inline void finalize_point(ExperimentConfig& c) {
  if (c.participation > 0.0) {
    if (c.participation > 1.0) throw config_error("participation: must lie in (0, 1]");
    c.run.m = resolve_m(c.participation, c.run.n);
  }
  if (auto it = c.eta_by_algorithm.find(to_string(c.run.algorithm)); it != c.eta_by_algorithm.end())
    c.run.eta = it->second;
  if (c.gamma_rule == GammaRule::eta_over_E) c.run.gamma = c.run.eta / static_cast<double>(c.run.E);
}

}  // namespace detail

/// Validates everything that can be checked without touching data files.
inline void validate_point(const ExperimentConfig& c, const std::string& label) {
  try {
    c.run.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error("sweep point '" + label + "': run: " + e.what());
  }
  if (c.problem != ProblemKind::synthetic) {
    if (c.data.path.empty()) throw config_error("data.path: required for problem " + to_string(c.problem));
    if (c.data.schema.label_column.empty()) throw config_error("data.label_column: required");
    if (!(c.data.train_fraction > 0.0 && c.data.train_fraction < 1.0))
      throw config_error("data.train_fraction: must lie in (0, 1)");
  }
  if (c.problem == ProblemKind::fair && !c.data.schema.protected_column)
    throw config_error("data.protected_column: required for problem fair");
  if (c.problem == ProblemKind::fair && c.model.kind == ModelKind::mlp && c.model.hidden == 0)
    throw config_error("model.hidden: must be >= 1");
}

inline std::vector<SweepPoint> expand_sweep(const ExperimentConfig& base) {
  if (base.seeds.empty()) throw config_error("seeds: must be non-empty");
  const SweepConfig& sw = base.sweep;
  ExperimentConfig flat = base;
  flat.sweep = {};

  std::vector<std::pair<std::string, ExperimentConfig>> stage;
  if (sw.cases.empty()) {
    stage.push_back({"", flat});
  } else {
    for (const auto& sc : sw.cases) {
      json tree = config_to_json(flat);
      for (auto it = sc.set.begin(); it != sc.set.end(); ++it) set_dotted(tree, it.key(), it.value());
      ExperimentConfig c;
      try {
        c = config_from_json(tree);
      } catch (const config_error& e) {
        throw config_error("sweep.cases '" + sc.label + "': " + e.what());
      }
      stage.push_back({sc.label, c});
    }
  }

  std::vector<SweepPoint> points;
  auto axis = [](auto& values) { return values.empty() ? std::size_t{1} : values.size(); };
  for (auto& [case_label, cfg] : stage)
    for (std::size_t a = 0; a < axis(sw.algorithm); ++a)
      for (std::size_t t = 0; t < axis(sw.alpha); ++t)
        for (std::size_t e = 0; e < axis(sw.E); ++e)
          for (std::size_t r = 0; r < axis(sw.participation); ++r) {
            SweepPoint pt;
            pt.config = cfg;
            std::vector<std::string> parts;
            if (!case_label.empty()) {
              parts.push_back(case_label);
              pt.axes["case"] = case_label;
            }
            if (!sw.algorithm.empty()) {
              pt.config.run.algorithm = sw.algorithm[a];
              parts.push_back("alg-" + to_string(sw.algorithm[a]));
              pt.axes["algorithm"] = to_string(sw.algorithm[a]);
            }
            if (!sw.alpha.empty()) {
              pt.config.run.alpha = sw.alpha[t];
              parts.push_back("alpha-" + format_number(sw.alpha[t]));
              pt.axes["alpha"] = sw.alpha[t];
            }
            if (!sw.E.empty()) {
              pt.config.run.E = sw.E[e];
              parts.push_back("E-" + std::to_string(sw.E[e]));
              pt.axes["E"] = sw.E[e];
            }
            if (!sw.participation.empty()) {
              pt.config.participation = sw.participation[r];
              parts.push_back("part-" + format_number(sw.participation[r]));
              pt.axes["participation"] = sw.participation[r];
            }
            detail::finalize_point(pt.config);
            if (parts.empty()) parts.push_back("base");
            for (const auto& s : parts) pt.label += (pt.label.empty() ? "" : "_") + s;
            validate_point(pt.config, pt.label);
            points.push_back(std::move(pt));
          }
  return points;
}

/// The config echoed in a metrics header: one sweep point, one seed, with
/// the output location left out so reruns elsewhere produce identical bytes.
inline ExperimentConfig resolved_for_seed(const SweepPoint& pt, std::uint64_t seed) {
  ExperimentConfig c = pt.config;
  c.seeds = {seed};
  c.run.run_seed = seed;
  c.participation = 0.0;
  c.gamma_rule = GammaRule::fixed;
  c.eta_by_algorithm.clear();
  c.output_dir.clear();
  return c;
}

}  // namespace fedswitch::harness
