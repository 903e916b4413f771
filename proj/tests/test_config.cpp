#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "mbcool/experiment.hpp"

using namespace mbcool;

namespace {

const std::filesystem::path kConfigDir = MBCOOL_CONFIG_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test");
}

const char* kMinimal =
    "[protocol]\nrounds = 3\n"
    "[mode_0]\nomega_rad_per_s = 1.4e9\ncoupling_rad_per_s = 5.6e7\n"
    "detuning_rad_per_s = 1.4e7\ntemperature_K = 0.1\n";

}  // namespace

TEST(Config, BundledFig4) {
  const auto cfg = load_config((kConfigDir / "fig4.cfg").string());
  EXPECT_EQ(cfg.name, "fig4");
  ASSERT_EQ(cfg.modes.size(), 2u);
  EXPECT_EQ(cfg.modes[1].omega, 1.68e9);
  EXPECT_EQ(cfg.modes[0].coupling, 0.04 * 1.4e9);
  EXPECT_EQ(cfg.schedule.rounds, 100u);
  EXPECT_FALSE(cfg.schedule.interval.has_value());
  EXPECT_EQ(resolve_kernel(cfg), KernelKind::closed_form);
}

TEST(Config, EveryBundledConfigRoundTrips) {
  for (const auto& figure : figure_ids())
    for (const auto& file : figure_configs(figure)) {
      const auto cfg = load_config((kConfigDir / file).string());
      EXPECT_EQ(parse(serialize_config(cfg)), cfg) << file;
    }
}

TEST(Config, RoundTripKeepsEveryField) {
  auto cfg = parse(kMinimal);
  cfg.name = "custom";
  cfg.kernel = KernelChoice::oracle;
  cfg.schedule = Schedule{ScheduleKind::iterative, 1.2345678901234567e-9, 4, 17};
  cfg.truncation = {3.3e-11, 777};
  cfg.sparse = {2.5e-5, 12345};
  cfg.output_csv = "out/run.csv";
  cfg.scan = ScanSettings{1.0 / 3.0 * 1e-8, 123};
  cfg.modes.push_back({1.1e9, 0.1 / 3.0, 1.4e7, 0.07});
  EXPECT_EQ(parse(serialize_config(cfg)), cfg);
}

TEST(Config, AutoKernelPicksOracleForUnequalDetunings) {
  const auto cfg = load_config((kConfigDir / "fig7_df2.cfg").string());
  auto copy = cfg;
  copy.kernel = KernelChoice::automatic;
  EXPECT_EQ(resolve_kernel(copy), KernelKind::oracle);
}

TEST(Config, SchemaErrorsNameTheField) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("[protocol]\nrounds = 3\n", "mode");
  expect_error(std::string(kMinimal) + "[mode_0]\n", "duplicate");
  expect_error(std::string(kMinimal) + "[extra]\nx = 1\n", "[extra]");
  expect_error(std::string(kMinimal) + "[truncation]\nhard_capp = 3\n", "hard_capp");
  expect_error("[protocol]\nrounds = three\n[mode_0]\nomega_rad_per_s = 1\ncoupling_rad_per_s = 1\n"
               "detuning_rad_per_s = 0\ntemperature_K = 0\n",
               "rounds");
  expect_error("[protocol]\nrounds = 3\n[mode_0]\nomega_rad_per_s = 1e9\ncoupling_rad_per_s = 1\n"
               "temperature_K = 0\n",
               "detuning_rad_per_s");
  expect_error("[protocol]\nrounds = 3\n[mode_1]\nomega_rad_per_s = 1e9\ncoupling_rad_per_s = 1\n"
               "detuning_rad_per_s = 0\ntemperature_K = 0\n",
               "mode_0");
  expect_error(std::string(kMinimal) + "[mode_1]\nomega_rad_per_s = -1\ncoupling_rad_per_s = 1\n"
               "detuning_rad_per_s = 0\ntemperature_K = 0\n",
               "omega");
  expect_error("[protocol]\nrounds = 0\n[mode_0]\nomega_rad_per_s = 1e9\ncoupling_rad_per_s = 1\n"
               "detuning_rad_per_s = 0\ntemperature_K = 0\n",
               "round");
  expect_error(std::string(kMinimal) + "[protocol2]\n", "protocol2");
}

TEST(Experiment, ReproduceFig7WritesManifestAndIsBitwiseStable) {
  const auto dir = std::filesystem::temp_directory_path() / "mbcool_test_fig7";
  std::filesystem::remove_all(dir);
  const auto files = reproduce_figure("fig7", dir / "a", kConfigDir);
  ASSERT_EQ(files.size(), 4u);
  setenv("MBCOOL_THREADS", "3", 1);
  reproduce_figure("fig7", dir / "b", kConfigDir);
  unsetenv("MBCOOL_THREADS");
  for (const auto& f : files) EXPECT_EQ(slurp(dir / "a" / f.csv), slurp(dir / "b" / f.csv)) << f.csv;
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["figure"], "fig7");
  EXPECT_EQ(manifest["outputs"].size(), 4u);
  EXPECT_EQ(manifest["outputs"][2]["config"], "fig7_df3.cfg");
  std::filesystem::remove_all(dir);
}

TEST(Experiment, UnknownFigure) {
  EXPECT_THROW(reproduce_figure("fig9", std::filesystem::temp_directory_path(), kConfigDir), InvalidArgument);
}
