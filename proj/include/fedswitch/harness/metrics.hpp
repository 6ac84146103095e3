#pragma once

// JSONL metrics files and seed summaries.
//
// A metrics file holds one header line followed by one line per round:
//   {"type":"header","schema_version":1,"artifact_version":...,"config":{...},...}
//   {"type":"round","round":0,"g_hat":...,"F_exact":...,...}

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedswitch/round_common.hpp"

#ifndef FEDSWITCH_VERSION
#define FEDSWITCH_VERSION "0.0.0"
#endif

namespace fedswitch::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = FEDSWITCH_VERSION;

class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json round_to_json(const RoundRecord& r) {
  return json{{"type", "round"},
              {"round", r.round},
              {"sampled", r.sampled},
              {"g_hat", r.g_hat},
              {"g_softmax", r.g_softmax},
              {"g_batch_max", r.g_batch_max},
              {"f_softmax", r.f_softmax},
              {"indicator", r.indicator},
              {"in_S", r.in_S},
              {"degenerate", r.degenerate},
              {"F_exact", r.F_exact},
              {"G_exact", r.G_exact},
              {"grad_evals", r.grad_evals},
              {"value_evals", r.value_evals},
              {"weight_entropy", r.weight_entropy},
              {"lambda", r.lambda}};
}

/// Line-oriented writer that publishes its file only on commit. Until then
/// lines go to "<path>.tmp"; a writer destroyed without commit leaves the
/// partial output at "<path>.incomplete".
class JsonlWriter {
 public:
  explicit JsonlWriter(std::filesystem::path path) : path_(std::move(path)), tmp_(path_) {
    tmp_ += ".tmp";
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error(tmp_.string() + ": cannot open for writing");
  }

  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  ~JsonlWriter() {
    if (committed_) return;
    out_.close();
    std::error_code ec;
    auto failed = path_;
    failed += ".incomplete";
    std::filesystem::rename(tmp_, failed, ec);
  }

  void write(const json& line) {
    out_ << line.dump() << '\n';
    if (!out_) throw std::runtime_error(tmp_.string() + ": write failed");
  }

  void commit() {
    out_.close();
    if (!out_) throw std::runtime_error(tmp_.string() + ": close failed");
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

/// Writes a whole JSON document through a temporary file.
inline void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

// --- statistics ------------------------------------------------------------

struct Stat {
  double mean = 0.0;
  double var = 0.0;  // unbiased, 0 for a single value
  double std = 0.0;
  std::size_t count = 0;
};

inline Stat describe(const std::vector<double>& xs) {
  Stat s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.var = ss / static_cast<double>(xs.size() - 1);
    s.std = std::sqrt(s.var);
  }
  return s;
}

inline json stat_to_json(const Stat& s) {
  return json{{"mean", s.mean}, {"var", s.var}, {"std", s.std}, {"count", s.count}};
}

// --- summarize -------------------------------------------------------------

struct FileFinal {
  std::string file;
  std::string group;
  std::uint64_t seed = 0;
  double F_exact = 0.0;
  double G_exact = 0.0;
  double kappa = 0.0;
  std::size_t rounds = 0;
  std::size_t grad_evals = 0;
};

/// Reads one metrics file and extracts the final-round values.
inline FileFinal read_metrics_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw usage_error(file + ": cannot open");
  FileFinal out;
  out.file = file;
  std::string line;
  std::size_t lineno = 0, in_S = 0;
  bool have_header = false;
  json last;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw usage_error(file + ":" + std::to_string(lineno) + ": not a JSON object");
    if (!have_header) {
      if (j.value("type", "") != "header") throw usage_error(file + ": first line is not a header record");
      const int version = j.value("schema_version", -1);
      if (version != kSchemaVersion)
        throw usage_error(file + ": schema_version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
      out.group = j.value("point", std::string("base"));
      if (j.contains("experiment")) out.group = j["experiment"].get<std::string>() + "/" + out.group;
      out.seed = j.value("seed", std::uint64_t{0});
      have_header = true;
      continue;
    }
    if (j.value("type", "") != "round") continue;
    ++out.rounds;
    if (j.value("in_S", false)) ++in_S;
    last = std::move(j);
  }
  if (!have_header) throw usage_error(file + ": empty metrics file");
  if (out.rounds > 0) {
    out.F_exact = last.value("F_exact", 0.0);
    out.G_exact = last.value("G_exact", 0.0);
    out.grad_evals = last.value("grad_evals", std::size_t{0});
    out.kappa = static_cast<double>(in_S) / static_cast<double>(out.rounds);
  }
  return out;
}

/// Groups files by experiment point and reports mean/var/std across seeds of
/// the final-round exact objective and constraint, kappa and gradient work.
inline json summarize(const std::vector<std::string>& files) {
  if (files.empty()) throw usage_error("summarize: no metrics files given");
  std::map<std::string, std::vector<FileFinal>> groups;
  for (const auto& f : files) {
    FileFinal ff = read_metrics_file(f);
    groups[ff.group].push_back(std::move(ff));
  }
  json out = json::object();
  for (const auto& [name, items] : groups) {
    std::vector<double> F, G, kappa, evals;
    json seeds = json::array();
    for (const auto& it : items) {
      F.push_back(it.F_exact);
      G.push_back(it.G_exact);
      kappa.push_back(it.kappa);
      evals.push_back(static_cast<double>(it.grad_evals));
      seeds.push_back(it.seed);
    }
    out[name] = json{{"seeds", seeds},
                     {"F_exact", stat_to_json(describe(F))},
                     {"G_exact", stat_to_json(describe(G))},
                     {"kappa", stat_to_json(describe(kappa))},
                     {"grad_evals", stat_to_json(describe(evals))}};
  }
  return out;
}

/// Expands directories into the *.jsonl files beneath them, sorted.
inline std::vector<std::string> collect_metrics_files(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    if (std::filesystem::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : std::filesystem::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  return files;
}

}  // namespace fedswitch::harness
