#pragma once

// Experiment configuration files (INI).
//
//   [experiment]  name
//   [protocol]    kernel = auto|closed_form|oracle, schedule = equal|iterative,
//                 interval_s = auto|<seconds>, update_cadence, rounds
//   [truncation]  tail_epsilon, hard_cap
//   [sparse]      joint_tail_epsilon, max_entries      (K >= 3, oracle kernel)
//   [output]      csv
//   [scan]        tau_max_s, samples
//   [mode_0] ...  omega_rad_per_s, coupling_rad_per_s, detuning_rad_per_s, temperature_K
//
// Unknown sections or keys are rejected so typos cannot silently fall back
// to defaults.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mbcool/cooling_kernel.hpp"
#include "mbcool/errors.hpp"
#include "mbcool/format.hpp"
#include "mbcool/physics.hpp"
#include "mbcool/protocol.hpp"
#include "mbcool/state.hpp"

namespace mbcool {

enum class KernelChoice { automatic, closed_form, oracle };

inline const char* to_string(KernelChoice k) {
  switch (k) {
    case KernelChoice::automatic: return "auto";
    case KernelChoice::closed_form: return "closed_form";
    case KernelChoice::oracle: return "oracle";
  }
  return "auto";
}

struct ScanSettings {
  double tau_max = 0.0;  // s
  std::size_t samples = 2000;

  friend bool operator==(const ScanSettings&, const ScanSettings&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<ModeSpec> modes;
  Schedule schedule;
  KernelChoice kernel = KernelChoice::automatic;
  TruncationPolicy truncation;
  SparsePolicy sparse;
  std::optional<std::string> output_csv;
  std::optional<ScanSettings> scan;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.name == b.name && a.modes == b.modes && a.schedule == b.schedule && a.kernel == b.kernel &&
           a.truncation == b.truncation && a.sparse.joint_tail_epsilon == b.sparse.joint_tail_epsilon &&
           a.sparse.max_entries == b.sparse.max_entries && a.output_csv == b.output_csv && a.scan == b.scan;
  }
};

/// closed_form when every detuning agrees to 1e-12 relative, oracle otherwise.
inline KernelKind resolve_kernel(const ExperimentConfig& cfg) {
  switch (cfg.kernel) {
    case KernelChoice::closed_form: return KernelKind::closed_form;
    case KernelChoice::oracle: return KernelKind::oracle;
    case KernelChoice::automatic: break;
  }
  return detunings_uniform(cfg.modes) ? KernelKind::closed_form : KernelKind::oracle;
}

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string field_name(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

inline double parse_double(const std::string& text, const std::string& field) {
  const auto t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(field + ": expected a number, got '" + t + "'");
  return v;
}

inline std::size_t parse_count(const std::string& text, const std::string& field) {
  const auto t = trim(text);
  unsigned long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(field + ": expected a non-negative integer, got '" + t + "'");
  return static_cast<std::size_t>(v);
}

class SectionReader {
 public:
  SectionReader(const ptree& tree, std::string name) : name_(std::move(name)) {
    for (const auto& [key, value] : tree) {
      if (!value.empty()) throw ConfigError("[" + name_ + "]: nested keys are not allowed");
      values_[key] = trim(value.data());
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    auto v = it->second;
    values_.erase(it);
    return v;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError(field_name(name_, key) + ": missing required key");
    return *v;
  }

  std::string field(const std::string& key) const { return field_name(name_, key); }

  void finish() const {
    if (!values_.empty()) throw ConfigError(field_name(name_, values_.begin()->first) + ": unknown key");
  }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

inline std::optional<std::size_t> mode_section_index(const std::string& section) {
  const std::string prefix = "mode_";
  if (section.rfind(prefix, 0) != 0 || section.size() == prefix.size()) return std::nullopt;
  std::size_t k = 0;
  const char* first = section.data() + prefix.size();
  const char* last = section.data() + section.size();
  const auto res = std::from_chars(first, last, k);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  if (std::to_string(k) != std::string(first, last)) return std::nullopt;
  return k;
}

inline bool known_section(const std::string& name) {
  static const std::set<std::string> fixed{"experiment", "protocol", "truncation", "sparse", "output", "scan"};
  return fixed.count(name) > 0 || mode_section_index(name).has_value();
}

}  // namespace detail

/// Parses and validates a configuration; `source` names the input in messages.
inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "config") {
  using detail::SectionReader;
  std::ostringstream raw;
  raw << in.rdbuf();
  // the INI reader drops empty sections, so headers are checked on the raw text
  std::istringstream lines(raw.str());
  for (std::string line; std::getline(lines, line);) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] != '[') continue;
    const auto close = line.find(']', first);
    if (close == std::string::npos) continue;
    const auto name = line.substr(first + 1, close - first - 1);
    if (!detail::known_section(name)) throw ConfigError(source + ": unknown section [" + name + "]");
  }
  boost::property_tree::ptree tree;
  try {
    std::istringstream body(raw.str());
    boost::property_tree::ini_parser::read_ini(body, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ExperimentConfig cfg;
  std::map<std::size_t, ModeSpec> modes;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key '" + section + "' outside any section");
    SectionReader r(body, section);
    if (section == "experiment") {
      if (auto v = r.take("name")) cfg.name = *v;
    } else if (section == "protocol") {
      if (auto v = r.take("kernel")) {
        if (*v == "auto") cfg.kernel = KernelChoice::automatic;
        else if (*v == "closed_form") cfg.kernel = KernelChoice::closed_form;
        else if (*v == "oracle") cfg.kernel = KernelChoice::oracle;
        else throw ConfigError(r.field("kernel") + ": expected auto, closed_form or oracle");
      }
      if (auto v = r.take("schedule")) {
        if (*v == "equal") cfg.schedule.kind = ScheduleKind::equal;
        else if (*v == "iterative") cfg.schedule.kind = ScheduleKind::iterative;
        else throw ConfigError(r.field("schedule") + ": expected equal or iterative");
      }
      if (auto v = r.take("interval_s"); v && *v != "auto")
        cfg.schedule.interval = detail::parse_double(*v, r.field("interval_s"));
      if (auto v = r.take("update_cadence"))
        cfg.schedule.update_cadence = detail::parse_count(*v, r.field("update_cadence"));
      cfg.schedule.rounds = detail::parse_count(r.require("rounds"), r.field("rounds"));
    } else if (section == "truncation") {
      if (auto v = r.take("tail_epsilon")) cfg.truncation.tail_epsilon = detail::parse_double(*v, r.field("tail_epsilon"));
      if (auto v = r.take("hard_cap")) cfg.truncation.hard_cap = detail::parse_count(*v, r.field("hard_cap"));
    } else if (section == "sparse") {
      if (auto v = r.take("joint_tail_epsilon"))
        cfg.sparse.joint_tail_epsilon = detail::parse_double(*v, r.field("joint_tail_epsilon"));
      if (auto v = r.take("max_entries")) cfg.sparse.max_entries = detail::parse_count(*v, r.field("max_entries"));
    } else if (section == "output") {
      if (auto v = r.take("csv")) cfg.output_csv = *v;
    } else if (section == "scan") {
      ScanSettings s;
      s.tau_max = detail::parse_double(r.require("tau_max_s"), r.field("tau_max_s"));
      if (auto v = r.take("samples")) s.samples = detail::parse_count(*v, r.field("samples"));
      cfg.scan = s;
    } else if (auto k = detail::mode_section_index(section)) {
      ModeSpec m;
      m.omega = detail::parse_double(r.require("omega_rad_per_s"), r.field("omega_rad_per_s"));
      m.coupling = detail::parse_double(r.require("coupling_rad_per_s"), r.field("coupling_rad_per_s"));
      m.detuning = detail::parse_double(r.require("detuning_rad_per_s"), r.field("detuning_rad_per_s"));
      m.temperature = detail::parse_double(r.require("temperature_K"), r.field("temperature_K"));
      try {
        m.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError("[" + section + "]: " + e.what());
      }
      modes[*k] = m;
    } else {
      throw ConfigError(source + ": unknown section [" + section + "]");
    }
    r.finish();
  }
  if (tree.find("protocol") == tree.not_found()) throw ConfigError("[protocol] rounds: missing required key");

  if (modes.empty()) throw ConfigError("modes: at least one [mode_<k>] section is required");
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (!modes.count(k)) throw ConfigError("modes: [mode_" + std::to_string(k) + "] is missing");
    cfg.modes.push_back(modes[k]);
  }
  try {
    validate_modes(cfg.modes);
    cfg.schedule.validate();
    cfg.truncation.validate();
    cfg.sparse.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.scan && (!(cfg.scan->tau_max > 0.0) || !std::isfinite(cfg.scan->tau_max)))
    throw ConfigError("[scan] tau_max_s: must be finite and > 0");
  if (cfg.scan && cfg.scan->samples < 2) throw ConfigError("[scan] samples: must be >= 2");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_config(in, path);
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\nname = " << cfg.name << "\n\n";
  out << "[protocol]\nkernel = " << to_string(cfg.kernel) << "\nschedule = " << to_string(cfg.schedule.kind)
      << "\ninterval_s = " << (cfg.schedule.interval ? format_double(*cfg.schedule.interval) : "auto")
      << "\nupdate_cadence = " << cfg.schedule.update_cadence << "\nrounds = " << cfg.schedule.rounds << "\n\n";
  out << "[truncation]\ntail_epsilon = " << format_double(cfg.truncation.tail_epsilon)
      << "\nhard_cap = " << cfg.truncation.hard_cap << "\n\n";
  out << "[sparse]\njoint_tail_epsilon = " << format_double(cfg.sparse.joint_tail_epsilon)
      << "\nmax_entries = " << cfg.sparse.max_entries << "\n\n";
  if (cfg.output_csv) out << "[output]\ncsv = " << *cfg.output_csv << "\n\n";
  if (cfg.scan)
    out << "[scan]\ntau_max_s = " << format_double(cfg.scan->tau_max) << "\nsamples = " << cfg.scan->samples
        << "\n\n";
  for (std::size_t k = 0; k < cfg.modes.size(); ++k) {
    const auto& m = cfg.modes[k];
    out << "[mode_" << k << "]\nomega_rad_per_s = " << format_double(m.omega)
        << "\ncoupling_rad_per_s = " << format_double(m.coupling)
        << "\ndetuning_rad_per_s = " << format_double(m.detuning)
        << "\ntemperature_K = " << format_double(m.temperature) << "\n";
    if (k + 1 < cfg.modes.size()) out << "\n";
  }
  return out.str();
}

}  // namespace mbcool
