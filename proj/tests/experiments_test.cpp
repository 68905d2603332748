#include "dferr/experiments.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using dferr::ConfigError;
using dferr::ExperimentConfig;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dferr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig small(const std::string& id, std::size_t samples) {
  ExperimentConfig c;
  c.experiment = id;
  c.samples = samples;
  return c;
}

}  // namespace

TEST(Registry, HoldsTheBuiltinExperiments) {
  const auto& reg = dferr::builtin_experiments();
  const std::vector<std::string> expected = {"binary-bias",         "polya-variance",      "graduation-variance",
                                             "graduation-bias",     "graduation-afp",      "perturbation-abar",
                                             "image-structure",     "locality",            "operator-relations",
                                             "variance-forms"};
  auto ids = reg.ids();
  std::sort(ids.begin(), ids.end());
  auto sorted = expected;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(ids, sorted);
  for (const auto& e : reg.experiments()) EXPECT_FALSE(e.description.empty()) << e.id;
  const json list = reg.list_json();
  ASSERT_TRUE(list.is_array());
  EXPECT_EQ(list.size(), expected.size());
  EXPECT_NE(reg.list_text().find("graduation-afp"), std::string::npos);
  EXPECT_EQ(reg.find("nope"), nullptr);
}

TEST(Registry, RejectsDuplicateIds) {
  dferr::ExperimentRegistry reg;
  dferr::Experiment e;
  e.id = "x";
  reg.add(e);
  EXPECT_THROW(reg.add(e), std::invalid_argument);
}

TEST(Config, ParsesAllFields) {
  const auto c = dferr::config_from_json(json::parse(R"json({
    "experiment": "locality", "scheme": {"scheme": "graduation", "law": {"kind": "uniform"}},
    "battery": ["sin(x0)"], "levels": [8, 16, 32], "samples": 5000, "seed": 18446744073709551615,
    "out": "results", "tolerances": {"slope_tolerance": 0.5}, "workers": 2})json"));
  EXPECT_EQ(c.experiment, "locality");
  EXPECT_EQ(c.battery, std::vector<std::string>{"sin(x0)"});
  EXPECT_EQ(c.levels, (std::vector<int>{8, 16, 32}));
  EXPECT_EQ(*c.samples, 5000u);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.out, "results");
  EXPECT_EQ(c.tolerances.at("slope_tolerance"), 0.5);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_EQ(dferr::config_from_json(json::parse(R"({"experiment": "x", "levels": 7})")).levels, std::vector<int>{7});
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(dferr::config_from_json(json::parse(R"({"experiment": "x", "colour": 1})")), ConfigError);
  EXPECT_THROW(dferr::config_from_json(json::parse(R"({"levels": [1]})")), ConfigError);
  EXPECT_THROW(dferr::config_from_json(json::parse(R"({"experiment": "x", "samples": -3})")), ConfigError);
  EXPECT_THROW(dferr::config_from_json(json::parse(R"({"experiment": "x", "seed": 1.5})")), ConfigError);
  EXPECT_THROW(dferr::config_from_json(json::parse(R"({"experiment": "x", "levels": []})")), ConfigError);
  EXPECT_THROW(dferr::config_from_json(json::parse(R"({"experiment": "x", "tolerances": {"z": "big"}})")),
               ConfigError);
  EXPECT_THROW(dferr::config_from_json(json::parse("[1]")), ConfigError);
}

TEST(RunExperiment, UnknownIdListsRegisteredIds) {
  try {
    dferr::run_experiment(dferr::builtin_experiments(), small("graduation-biass", 1000));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("graduation-bias"), std::string::npos);
  }
}

TEST(RunExperiment, RejectsBadSettings) {
  const auto& reg = dferr::builtin_experiments();
  EXPECT_THROW(dferr::run_experiment(reg, small("binary-bias", 999)), ConfigError);
  auto c = small("binary-bias", 2000);
  c.tolerances["relative"] = 0.1;
  EXPECT_THROW(dferr::run_experiment(reg, c), ConfigError);
  c = small("binary-bias", 2000);
  c.levels = {60};
  EXPECT_THROW(dferr::run_experiment(reg, c), ConfigError);
  c = small("graduation-bias", 2000);
  c.battery = {"cos(x0"};
  EXPECT_THROW(dferr::run_experiment(reg, c), ConfigError);
  c = small("graduation-bias", 2000);
  c.scheme = json::parse(R"({"scheme": "graduation", "law": {"kind": "levy"}})");
  EXPECT_THROW(dferr::run_experiment(reg, c), ConfigError);
}

TEST(RunExperiment, ProducesRowsAndCriteria) {
  const auto r = dferr::run_experiment(dferr::builtin_experiments(), small("binary-bias", 20000));
  EXPECT_EQ(r.experiment, "binary-bias");
  EXPECT_EQ(r.seed, 1u);
  EXPECT_FALSE(r.rows.empty());
  EXPECT_FALSE(r.criteria.empty());
  const json s = r.summary();
  EXPECT_EQ(s.at("experiment"), "binary-bias");
  EXPECT_EQ(s.at("criteria").size(), r.criteria.size());
  EXPECT_EQ(s.at("passed").get<bool>(), r.passed());
}

// Every experiment runs end to end at a small sample count.
TEST(RunExperiment, EveryExperimentRunsSmall) {
  for (const auto& id : dferr::builtin_experiments().ids()) {
    auto c = small(id, 2000);
    if (id == "graduation-afp") c.samples = 5000;
    const auto r = dferr::run_experiment(dferr::builtin_experiments(), c);
    EXPECT_FALSE(r.criteria.empty()) << id;
    EXPECT_FALSE(r.rows.empty()) << id;
  }
}

TEST(RunExperiment, OutputsAreByteIdenticalAcrossRunsAndWorkers) {
  auto c = small("operator-relations", 20000);
  c.seed = 99;
  const fs::path a = scratch_dir("runs_a");
  const fs::path b = scratch_dir("runs_b");
  const auto ra = dferr::run_experiment(dferr::builtin_experiments(), c);
  dferr::write_outputs(ra, a.string());
  c.workers = 3;
  const auto rb = dferr::run_experiment(dferr::builtin_experiments(), c);
  dferr::write_outputs(rb, b.string());
  const std::string csv_a = read_file(a / "operator-relations.csv");
  EXPECT_FALSE(csv_a.empty());
  EXPECT_EQ(csv_a, read_file(b / "operator-relations.csv"));
  const json ja = json::parse(read_file(a / "operator-relations.json"));
  EXPECT_EQ(ja.at("seed"), 99);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunExperiment, SeedChangesResults) {
  auto c = small("binary-bias", 5000);
  const auto r1 = dferr::run_experiment(dferr::builtin_experiments(), c);
  c.seed = 2;
  const auto r2 = dferr::run_experiment(dferr::builtin_experiments(), c);
  EXPECT_NE(dferr::to_csv(r1.rows), dferr::to_csv(r2.rows));
}

#ifdef DFERR_CLI_PATH

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DFERR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  const fs::path log = dir / "log.txt";
  EXPECT_EQ(run_cli("list", log), 0);
  EXPECT_NE(read_file(log).find("variance-forms"), std::string::npos);
  EXPECT_EQ(run_cli("list --json", log), 0);
  EXPECT_TRUE(json::parse(read_file(log)).is_array());

  EXPECT_EQ(run_cli("run --experiment binary-bias --samples 20000", log), 0) << read_file(log);
  EXPECT_NE(read_file(log).find("PASS "), std::string::npos);

  EXPECT_EQ(run_cli("run --experiment no-such-thing", log), 2);
  EXPECT_NE(read_file(log).find("binary-bias"), std::string::npos);
  EXPECT_EQ(run_cli("run --experiment binary-bias --samples 10", log), 2);
  EXPECT_EQ(run_cli("run --experiment binary-bias --n x", log), 2);
  EXPECT_EQ(run_cli("run --experiment binary-bias --bogus", log), 2);
  EXPECT_EQ(run_cli("run --experiment binary-bias --law cauchy", log), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string(), log), 2);

  std::ofstream(dir / "fail.json") << R"({"experiment": "binary-bias", "samples": 20000, "tolerances": {"z": 1e-9}})";
  EXPECT_EQ(run_cli("run --config " + (dir / "fail.json").string(), log), 1);
  EXPECT_NE(read_file(log).find("FAIL "), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, WritesOutputsAndJsonSummary) {
  const fs::path dir = scratch_dir("cli_out");
  const fs::path log = dir / "log.txt";
  EXPECT_EQ(run_cli("run --experiment locality --n 8,16,32 --samples 5000 --json --out " + (dir / "r").string(), log),
            0)
      << read_file(log);
  const json summary = json::parse(read_file(log));
  EXPECT_EQ(summary.at("experiment"), "locality");
  EXPECT_TRUE(fs::exists(dir / "r" / "locality.csv"));
  EXPECT_TRUE(fs::exists(dir / "r" / "locality.json"));
  const std::string first = read_file(dir / "r" / "locality.csv");
  EXPECT_EQ(run_cli("run --experiment locality --n [8,16,32] --samples 5000 --workers 2 --out " + (dir / "r").string(),
                    log),
            0);
  EXPECT_EQ(read_file(dir / "r" / "locality.csv"), first);
  fs::remove_all(dir);
}

#endif
