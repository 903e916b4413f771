// mbcool: run, scan and reproduce measurement-based cooling experiments.
//
// Exit codes: 0 ok, 2 config or argument error, 4 truncation overflow, 3 any other library error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "mbcool/experiment.hpp"

#ifdef MBCOOL_CLI11_SINGLE_HEADER
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#ifndef MBCOOL_CONFIG_DIR
#define MBCOOL_CONFIG_DIR "configs"
#endif

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kOverflow = 4 };

int cmd_run(const std::string& path, const std::string& out_override) {
  const auto cfg = mbcool::load_config(path);
  const auto record = mbcool::run_experiment(cfg);
  const std::string out = !out_override.empty() ? out_override : cfg.output_csv.value_or(cfg.name + ".csv");
  mbcool::write_text_file(out, mbcool::run_csv_text(record));
  const auto& last = record.final_round();
  std::printf("%s: kernel=%s rounds=%zu nbar_total=%.6g fid_total=%.6g survival_cum=%.6g csv=%s\n",
              cfg.name.c_str(), mbcool::to_string(mbcool::resolve_kernel(cfg)), last.round, last.nbar_total,
              last.fid_total, last.survival_cum, out.c_str());
  for (auto round : record.interval_decreases)
    std::fprintf(stderr, "note: interval decreased at round %zu\n", round);
  return kOk;
}

int cmd_scan(const std::string& path, double tau_max, long long samples, const std::string& out_override) {
  if (samples < 2) throw mbcool::InvalidArgument("--samples must be >= 2");
  if (!(tau_max > 0.0)) throw mbcool::InvalidArgument("--tau-max must be > 0");
  const auto cfg = mbcool::load_config(path);
  const auto scan = mbcool::scan_experiment(cfg, tau_max, static_cast<std::size_t>(samples));
  const std::string out = !out_override.empty() ? out_override : cfg.name + "_scan.csv";
  mbcool::write_text_file(out, mbcool::scan_csv_text(scan));
  auto meta_path = std::filesystem::path(out).replace_extension(".json");
  mbcool::write_text_file(meta_path, mbcool::scan_metadata(cfg, scan).dump(2) + "\n");
  std::printf("%s: best_tau_s=%.6g best_nbar=%.6g initial_nbar=%.6g csv=%s\n", cfg.name.c_str(), scan.best_tau,
              scan.best_objective, scan.initial_mean, out.c_str());
  return kOk;
}

int cmd_reproduce(const std::string& figure, const std::string& out_dir, const std::string& config_dir) {
  const auto files = mbcool::reproduce_figure(figure, out_dir, config_dir);
  for (const auto& f : files) std::printf("%s <- %s\n", (std::filesystem::path(out_dir) / f.csv).c_str(), f.config.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-based ground-state cooling of resonator modes"};
  app.require_subcommand(1);

  std::string run_cfg, run_out;
  auto* run = app.add_subcommand("run", "run the protocol described by a config file");
  run->add_option("config", run_cfg, "config file")->required();
  run->add_option("--out", run_out, "CSV path (default: [output] csv, else <name>.csv)");

  std::string scan_cfg, scan_out;
  double tau_max = 0.0;
  long long samples = 2000;
  auto* scan = app.add_subcommand("scan", "single-measurement mean occupation versus interval");
  scan->add_option("config", scan_cfg, "config file")->required();
  scan->add_option("--tau-max", tau_max, "largest interval, s")->required();
  scan->add_option("--samples", samples, "grid points including both ends");
  scan->add_option("--out", scan_out, "CSV path (default: <name>_scan.csv)");

  std::string figure, out_dir, config_dir = MBCOOL_CONFIG_DIR;
  auto* repro = app.add_subcommand("reproduce", "regenerate the data behind a figure");
  repro->add_option("figure", figure, "fig3, fig4, fig5, fig6 or fig7")->required();
  repro->add_option("--out-dir", out_dir, "output directory")->required();
  repro->add_option("--config-dir", config_dir, "directory holding the bundled configs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(run_cfg, run_out);
    if (*scan) return cmd_scan(scan_cfg, tau_max, samples, scan_out);
    return cmd_reproduce(figure, out_dir, config_dir);
  } catch (const mbcool::TruncationOverflow& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "hint: raise the limit to at least " << e.required()
              << " ([truncation] hard_cap, or [sparse] max_entries for sparse states)\n";
    return kOverflow;
  } catch (const mbcool::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const mbcool::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const mbcool::Error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
}
