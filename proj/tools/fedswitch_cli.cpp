#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedswitch/harness/config.hpp"
#include "fedswitch/harness/experiment.hpp"
#include "fedswitch/harness/metrics.hpp"

namespace fs = std::filesystem;
using namespace fedswitch;
using namespace fedswitch::harness;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = fedswitch::detail::trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.front() == '-') throw config_error("--seeds: '" + item + "' is not a seed");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw config_error("--seeds: empty list");
  return seeds;
}

struct Common {
  std::string config;
  std::string out;
  std::string seeds;
  std::vector<std::string> overrides;
  std::size_t parallel = 1;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config, c.overrides);
  if (!c.seeds.empty()) cfg.seeds = parse_seeds(c.seeds);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (const char* env = std::getenv("FEDSWITCH_OUT"); env && *env) cfg.output_dir = env;
  return cfg;
}

std::string text_table(const json& summary) {
  std::ostringstream os;
  os << "point  seeds  F_exact(mean+-std)  G_exact(mean+-std)  kappa(mean+-std)  grad_evals(mean)\n";
  for (auto it = summary.begin(); it != summary.end(); ++it) {
    const json& s = it.value();
    auto pm = [&](const char* k) {
      std::ostringstream v;
      v << s[k]["mean"].get<double>() << " +- " << s[k]["std"].get<double>();
      return v.str();
    };
    os << it.key() << "  " << s["seeds"].size() << "  " << pm("F_exact") << "  " << pm("G_exact") << "  "
       << pm("kappa") << "  " << s["grad_evals"]["mean"].get<double>() << '\n';
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated constrained learning with softmax-weighted switching gradients"};
  app.set_version_flag("--version", std::string(kArtifactVersion));
  app.require_subcommand(1);

  Common common;
  auto add_config_flags = [&](CLI::App* sub, bool with_run_flags) {
    sub->add_option("--config", common.config, "experiment config (JSON)")->required();
    sub->add_option("--set", common.overrides, "override key=value (repeatable)");
    if (with_run_flags) {
      sub->add_option("--out", common.out, "output directory");
      sub->add_option("--seeds", common.seeds, "comma-separated seed list");
      sub->add_option("--parallel", common.parallel, "concurrent runs")->check(CLI::PositiveNumber);
    }
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment sweep");
  add_config_flags(run_cmd, true);
  CLI::App* validate_cmd = app.add_subcommand("validate-config", "parse and expand a config without running");
  add_config_flags(validate_cmd, false);
  validate_cmd->add_option("--seeds", common.seeds, "comma-separated seed list");
  CLI::App* synth_cmd = app.add_subcommand("gen-synth", "write the synthetic problem instance");
  add_config_flags(synth_cmd, false);
  synth_cmd->add_option("--out", common.out, "output directory");

  std::vector<std::string> inputs;
  std::string summary_out;
  CLI::App* sum_cmd = app.add_subcommand("summarize", "summarize metrics files");
  sum_cmd->add_option("files", inputs, "metrics files or directories");
  sum_cmd->add_option("--out", summary_out, "write the structured summary to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  ExperimentConfig cfg;
  try {
    if (!sum_cmd->parsed()) cfg = load(common);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (validate_cmd->parsed()) {
      const auto points = expand_sweep(cfg);
      std::cout << "config ok: " << points.size() << " point(s) x " << cfg.seeds.size() << " seed(s)\n";
      for (const auto& p : points) std::cout << "  " << p.label << '\n';
      return kOk;
    }
    if (synth_cmd->parsed()) {
      if (const char* env = std::getenv("FEDSWITCH_OUT"); env && *env) common.out = env;
      const fs::path out = common.out.empty() ? fs::path(cfg.output_dir) : fs::path(common.out);
      write_json_file(out / "synthetic_instance.json", synthetic_instance(cfg));
      std::cout << (out / "synthetic_instance.json").string() << '\n';
      return kOk;
    }
    if (sum_cmd->parsed()) {
      const json s = summarize(collect_metrics_files(inputs));
      std::cout << text_table(s);
      if (!summary_out.empty()) write_json_file(summary_out, s);
      return kOk;
    }
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }

  // run
  std::vector<SweepPoint> points;
  try {
    points = expand_sweep(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    RunOptions opts;
    opts.out_dir = cfg.output_dir;
    opts.parallel = common.parallel;
    opts.log = &std::cerr;
    const json s = run_experiment(cfg, opts);
    std::cout << text_table(s);
    return kOk;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kConfigError;
  } catch (const invalid_configuration& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
