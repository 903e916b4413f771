#pragma once

// Orchestration behind the command-line tool: runs, interval scans and the
// bundled figure reproductions. Everything written here is deterministic.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mbcool/config.hpp"
#include "mbcool/errors.hpp"
#include "mbcool/format.hpp"
#include "mbcool/interval_optimizer.hpp"
#include "mbcool/protocol.hpp"
#include "mbcool/state.hpp"

namespace mbcool {

inline JointState initial_state(const ExperimentConfig& cfg) {
  return make_joint_state(cfg.modes, cfg.truncation, resolve_kernel(cfg), cfg.sparse);
}

inline RunRecord run_experiment(const ExperimentConfig& cfg) {
  return run_protocol(initial_state(cfg), cfg.schedule, cfg.modes, resolve_kernel(cfg));
}

inline ScanResult scan_experiment(const ExperimentConfig& cfg, double tau_max, std::size_t samples) {
  const auto kind = resolve_kernel(cfg);
  const auto state = initial_state(cfg);
  return std::visit([&](const auto& s) { return scan_interval(s, cfg.modes, tau_max, samples, kind); }, state);
}

inline void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  out << "tau_s,nbar_after_one_measurement\n";
  for (std::size_t i = 0; i < scan.taus.size(); ++i)
    out << format_double(scan.taus[i]) << ',' << format_double(scan.objective[i]) << '\n';
}

/// Minimizer and reference values written next to a scan CSV.
inline nlohmann::ordered_json scan_metadata(const ExperimentConfig& cfg, const ScanResult& scan) {
  nlohmann::ordered_json meta;
  meta["experiment"] = cfg.name;
  meta["samples"] = scan.taus.size();
  meta["tau_max_s"] = scan.taus.back();
  meta["best_tau_s"] = scan.best_tau;
  meta["best_objective"] = scan.best_objective;
  meta["initial_mean"] = scan.initial_mean;
  meta["best_fraction_of_initial"] = scan.initial_mean > 0.0 ? scan.best_objective / scan.initial_mean : 0.0;
  std::vector<double> means;
  std::visit([&](const auto& s) { means = s.means(); }, initial_state(cfg));
  const auto rabi = thermal_rabi(means, couplings_of(cfg.modes));
  if (rabi.value > 0.0) meta["analytic_tau_s"] = 1.0 / rabi.value;
  return meta;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

inline std::string run_csv_text(const RunRecord& record) {
  std::ostringstream s;
  write_run_csv(s, record);
  return s.str();
}

inline std::string scan_csv_text(const ScanResult& scan) {
  std::ostringstream s;
  write_scan_csv(s, scan);
  return s.str();
}

struct ReproducedFile {
  std::string csv;     // file name inside the output directory
  std::string config;  // bundled config file name
};

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig3", "fig4", "fig5", "fig6", "fig7"};
  return ids;
}

/// Config files each figure is built from.
inline std::vector<std::string> figure_configs(const std::string& figure) {
  if (figure == "fig3") return {"fig3a.cfg", "fig3b.cfg"};
  if (figure == "fig4") return {"fig4.cfg"};
  if (figure == "fig5") return {"fig5_equal.cfg", "fig5_L10.cfg", "fig5_L5.cfg", "fig5_L2.cfg", "fig5_L1.cfg"};
  if (figure == "fig6") return {"fig6.cfg"};
  if (figure == "fig7") return {"fig7_df1.cfg", "fig7_df2.cfg", "fig7_df3.cfg", "fig7_df4.cfg"};
  throw InvalidArgument("unknown figure id '" + figure + "' (expected fig3, fig4, fig5, fig6 or fig7)");
}

namespace detail {

inline std::string stem(const std::string& file) { return std::filesystem::path(file).stem().string(); }

inline std::string fig4_table(const RunRecord& rec, int which) {
  std::ostringstream s;
  if (which == 0) {
    s << "round,nbar_total";
    for (std::size_t k = 0; k < rec.omegas.size(); ++k) s << ",nbar_mode_" << k;
  } else if (which == 1) {
    s << "round,fid_mode_a,fid_total";
  } else {
    s << "round,survival_round,survival_cum";
  }
  s << '\n';
  for (const auto& r : rec.rounds) {
    s << r.round;
    if (which == 0) {
      s << ',' << format_double(r.nbar_total);
      for (double v : r.nbar_modes) s << ',' << format_double(v);
    } else if (which == 1) {
      s << ',' << format_double(r.fid_mode_a) << ',' << format_double(r.fid_total);
    } else {
      s << ',' << format_double(r.survival_round) << ',' << format_double(r.survival_cum);
    }
    s << '\n';
  }
  return s.str();
}

}  // namespace detail

/// Writes one CSV per curve plus manifest.json into out_dir.
inline std::vector<ReproducedFile> reproduce_figure(const std::string& figure, const std::filesystem::path& out_dir,
                                                    const std::filesystem::path& config_dir) {
  const auto configs = figure_configs(figure);
  std::vector<ReproducedFile> files;
  nlohmann::ordered_json manifest;
  manifest["figure"] = figure;
  manifest["outputs"] = nlohmann::ordered_json::array();
  auto add = [&](const std::string& csv, const std::string& config, const std::string& text) {
    write_text_file(out_dir / csv, text);
    files.push_back({csv, config});
    manifest["outputs"].push_back({{"csv", csv}, {"config", config}});
  };

  for (const auto& file : configs) {
    const auto cfg = load_config((config_dir / file).string());
    const auto name = detail::stem(file);
    if (figure == "fig3") {
      if (!cfg.scan) throw ConfigError(file + ": [scan] section is required for fig3");
      const auto scan = scan_experiment(cfg, cfg.scan->tau_max, cfg.scan->samples);
      add(name + "_scan.csv", file, scan_csv_text(scan));
      const auto meta_name = name + "_scan.json";
      write_text_file(out_dir / meta_name, scan_metadata(cfg, scan).dump(2) + "\n");
      manifest["outputs"].back()["metadata"] = meta_name;
    } else if (figure == "fig4") {
      const auto rec = run_experiment(cfg);
      add(name + "_populations.csv", file, detail::fig4_table(rec, 0));
      add(name + "_fidelities.csv", file, detail::fig4_table(rec, 1));
      add(name + "_survival.csv", file, detail::fig4_table(rec, 2));
    } else {
      add(name + ".csv", file, run_csv_text(run_experiment(cfg)));
    }
  }
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return files;
}

}  // namespace mbcool
