// Command line runner for the built-in experiments.
//
//   dferr list [--json]
//   dferr run --experiment <id> [--config <path>] [--seed <u64>] [--samples <N>]
//             [--n <int or list>] [--workers <k>] [--out <dir>] [--law <kind>] [--json]
//
// Exit codes: 0 all criteria pass, 1 a criterion failed, 2 configuration error.

#include "dferr/experiments.hpp"
#include "dferr/report.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::vector<int> parse_levels(std::string text) {
  for (char& c : text) {
    if (c == '[' || c == ']') c = ' ';
  }
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    if (first == std::string::npos) throw dferr::ConfigError("--n: empty level in '" + text + "'");
    item = item.substr(first, last - first + 1);
    int value = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw dferr::ConfigError("--n: '" + item + "' is not an integer");
    }
    out.push_back(value);
    pos = end + 1;
  }
  return out;
}

struct RunFlags {
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::string levels;
  std::optional<unsigned> workers;
  std::string out;
  std::string law;
  bool json = false;
};

dferr::ExperimentConfig build_config(const RunFlags& f) {
  dferr::ExperimentConfig config;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw dferr::ConfigError("cannot open config file " + f.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw dferr::ConfigError("config file " + f.config_path + " is not valid JSON: " + e.what());
    }
    config = dferr::config_from_json(j);
  }
  if (!f.experiment.empty()) config.experiment = f.experiment;
  if (config.experiment.empty()) throw dferr::ConfigError("no experiment given (use --experiment or --config)");
  if (f.seed) config.seed = *f.seed;
  if (f.samples) config.samples = *f.samples;
  if (!f.levels.empty()) config.levels = parse_levels(f.levels);
  if (f.workers) config.workers = *f.workers;
  if (!f.out.empty()) config.out = f.out;
  if (!f.law.empty()) {
    const auto* exp = dferr::builtin_experiments().find(config.experiment);
    nlohmann::json scheme = config.scheme;
    if (scheme.is_null() && exp != nullptr) scheme = exp->defaults.scheme;
    if (!scheme.is_object() || !scheme.contains("law")) {
      throw dferr::ConfigError("--law does not apply to the scheme of experiment " + config.experiment);
    }
    if (f.law != "normal" && f.law != "uniform") {
      throw dferr::ConfigError("--law must be normal or uniform (use a config file for custom laws)");
    }
    scheme["law"] = {{"kind", f.law}};
    config.scheme = scheme;
  }
  return config;
}

int run(const RunFlags& flags) {
  dferr::ExperimentResult result;
  dferr::ExperimentConfig config;
  try {
    config = build_config(flags);
    result = dferr::run_experiment(dferr::builtin_experiments(), config);
  } catch (const dferr::ConfigError& e) {
    std::cerr << "dferr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "dferr: run failed: " << e.what() << '\n';
    return kExitFail;
  }
  if (!config.out.empty()) {
    try {
      dferr::write_outputs(result, config.out);
    } catch (const std::exception& e) {
      std::cerr << "dferr: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  if (flags.json) {
    std::cout << result.summary().dump(2) << '\n';
  } else {
    for (const auto& c : result.criteria) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": statistic "
                << dferr::format_double(c.statistic) << ", threshold "
                << dferr::format_double(c.threshold) << '\n';
    }
    std::cout << result.experiment << ": " << (result.passed() ? "all criteria pass" : "criterion failure")
              << " (seed " << result.seed << ")\n";
  }
  return result.passed() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-form error calculus experiments"};
  app.require_subcommand(1);

  bool list_json = false;
  auto* list = app.add_subcommand("list", "List the registered experiments");
  list->add_flag("--json", list_json, "Print a JSON array");

  RunFlags flags;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("--experiment", flags.experiment, "Experiment id");
  run_cmd->add_option("--config", flags.config_path, "JSON config file");
  run_cmd->add_option("--seed", flags.seed, "Root seed (unsigned 64-bit)");
  run_cmd->add_option("--samples", flags.samples, "Monte Carlo sample count");
  run_cmd->add_option("--n", flags.levels, "Level or comma-separated list of levels");
  run_cmd->add_option("--workers", flags.workers, "Worker threads");
  run_cmd->add_option("--out", flags.out, "Directory for the CSV report and JSON summary");
  run_cmd->add_option("--law", flags.law, "Replace the scheme's law kind (normal or uniform)");
  run_cmd->add_flag("--json", flags.json, "Print the JSON summary instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (list->parsed()) {
    const auto& registry = dferr::builtin_experiments();
    if (list_json) {
      std::cout << registry.list_json().dump(2) << '\n';
    } else {
      std::cout << registry.list_text();
    }
    return kExitPass;
  }
  return run(flags);
}
