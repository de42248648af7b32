#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bsheet/errors.hpp"
#include "bsheet/experiments.hpp"

using namespace bsheet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bsheet_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(BSHEET_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RejectsUnknownFieldsAndKinds) {
  EXPECT_THROW(ExperimentConfig::from_json(json{{"kind", "density"}, {"trails", 10}}), InvalidConfig);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"kind", "nope"}}), InvalidConfig);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"kind", "density"}, {"trials", -3}}), InvalidConfig);
  EXPECT_THROW(ExperimentConfig::from_json(json::array()), InvalidConfig);
}

TEST(Config, DefaultsAreFilledAndEchoed) {
  const auto c = ExperimentConfig::from_json(json{{"kind", "density"}, {"seed", 5}});
  EXPECT_EQ(c.seed, 5u);
  EXPECT_TRUE(c.params.contains("trials"));
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(Run, SeparationLargerThanWindowIsValidationError) {
  const fs::path dir = scratch("delta");
  const json raw{{"kind", "phase"}, {"delta", 5.0}, {"out", dir.string()}};
  const auto out = run_config(raw, std::nullopt, std::nullopt, std::nullopt);
  EXPECT_EQ(out.exit_code, kExitValidation);
  EXPECT_NE(out.message.find("InvalidConfig"), std::string::npos);
  EXPECT_NE(out.message.find("window diameter"), std::string::npos);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("exit_code"), 1);
}

TEST(Run, RepeatRunsAreByteIdentical) {
  const json raw{{"kind", "verify-pinning"}, {"check", "sampler"}, {"sampler_trials", 2000}, {"seed", 11}};
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run_config(raw, std::nullopt, a.string(), 1u);
  const auto rb = run_config(raw, std::nullopt, b.string(), 2u);
  ASSERT_FALSE(ra.csv_path.empty());
  EXPECT_EQ(slurp(ra.csv_path), slurp(rb.csv_path));
  EXPECT_FALSE(slurp(ra.csv_path).empty());
}

TEST(Run, ManifestRecordsChecks) {
  const fs::path dir = scratch("manifest");
  const json raw{{"kind", "covering"}, {"out", dir.string()}, {"seed", 1}};
  const auto out = run_config(raw, std::nullopt, std::nullopt, std::nullopt);
  EXPECT_EQ(out.exit_code, kExitOk) << out.message;
  const json m = json::parse(slurp(out.manifest_path));
  EXPECT_EQ(m.at("seed"), 1);
  EXPECT_EQ(m.at("checks").size(), out.checks.size());
  EXPECT_TRUE(m.contains("wall_time_seconds"));
}

TEST(List, KindsAndSchema) {
  EXPECT_EQ(experiment_kinds().size(), 7u);
  const json schema = json::parse(list_experiments(true));
  EXPECT_EQ(schema.size(), 7u);
  EXPECT_EQ(json::parse(list_experiments(true, "hitting")).size(), 1u);
  EXPECT_THROW(list_experiments(false, "nope"), InvalidConfig);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("--list"), 0);
  EXPECT_EQ(run_cli("--list nope"), 1);
  EXPECT_EQ(run_cli("covering --out " + dir.string()), 0);
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"kind": "phase", "delta": 5.0})";
  EXPECT_EQ(run_cli("phase --config " + bad.string() + " --out " + dir.string()), 1);
  EXPECT_EQ(run_cli("density --config " + bad.string() + " --out " + dir.string()), 1);
  // an absurd threshold makes the slope check fail
  const fs::path strict = dir / "strict.json";
  std::ofstream(strict) << R"({"kind": "covering", "slope_tol": 0.0})";
  EXPECT_EQ(run_cli("covering --config " + strict.string() + " --out " + dir.string()), 2);
}
