#pragma once

#include "dferr/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dferr {

/// Invalid experiment configuration (unknown id, bad field, bad value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  /// Scheme spec JSON; null selects the experiment's default scheme.
  nlohmann::json scheme;
  /// Test-function expressions; empty selects the default battery.
  std::vector<std::string> battery;
  /// Empty selects the default levels.
  std::vector<int> levels;
  /// Unset selects the default sample count.
  std::optional<std::size_t> samples;
  std::uint64_t seed = 1;
  /// Output directory; empty writes nothing.
  std::string out;
  std::map<std::string, double> tolerances;
  unsigned workers = 1;
};

/// Reads {"experiment", "scheme", "battery", "levels", "samples", "seed",
/// "out", "tolerances", "workers"}; every field but "experiment" is
/// optional. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);

struct CriterionOutcome {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct ExperimentResult {
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<CriterionOutcome> criteria;
  double wall_time = 0.0;

  bool passed() const;
  /// {experiment, seed, wall_time, passed, criteria: [{name, statistic,
  /// threshold, pass}]}.
  nlohmann::json summary() const;
};

/// Settings an experiment runs with after defaults are applied.
struct ResolvedConfig {
  nlohmann::json scheme;
  std::vector<std::string> battery;
  std::vector<int> levels;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::map<std::string, double> tolerances;
};

struct Experiment {
  std::string id;
  std::string description;
  /// Defaults for every optional config field; `tolerances` lists every
  /// accepted tolerance key.
  ResolvedConfig defaults;
  std::function<ExperimentResult(const ResolvedConfig&)> run;
};

class ExperimentRegistry {
 public:
  /// Throws std::invalid_argument on a duplicate id.
  void add(Experiment experiment);
  const Experiment* find(const std::string& id) const;
  /// Ids in registration order.
  std::vector<std::string> ids() const;
  const std::vector<Experiment>& experiments() const { return experiments_; }

  /// Plain text table of ids and descriptions.
  std::string list_text() const;
  /// [{"id": ..., "description": ...}, ...]
  nlohmann::json list_json() const;

 private:
  std::vector<Experiment> experiments_;
};

/// Registry holding every built-in experiment.
const ExperimentRegistry& builtin_experiments();

/// Applies defaults, validates and runs. Throws ConfigError for an unknown
/// id (the message lists the registered ids) or an invalid config.
ExperimentResult run_experiment(const ExperimentRegistry& registry, const ExperimentConfig& config);

/// Writes <out>/<experiment>.csv and <out>/<experiment>.json.
void write_outputs(const ExperimentResult& result, const std::string& out_dir);

}  // namespace dferr
