#pragma once

// Repeated evolve-then-measure rounds on diagonal joint states.
//
// A round multiplies every population by its cooling ratio |alpha|^2, records
// the pre-normalization mass as the round's success probability and
// renormalizes. The cumulative success probability is the product of the
// round values, which never underflows the way |alpha|^{2N} would.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mbcool/cooling_map.hpp"
#include "mbcool/errors.hpp"
#include "mbcool/format.hpp"
#include "mbcool/interval_optimizer.hpp"
#include "mbcool/physics.hpp"
#include "mbcool/state.hpp"

namespace mbcool {

enum class ScheduleKind { equal, iterative };

inline const char* to_string(ScheduleKind kind) { return kind == ScheduleKind::equal ? "equal" : "iterative"; }

struct Schedule {
  ScheduleKind kind = ScheduleKind::equal;
  /// Fixed interval for equal spacing, first interval for iterative runs;
  /// nullopt means 1/Omega_th of the initial state.
  std::optional<double> interval;
  /// Iterative runs recompute tau before rounds L+1, 2L+1, ...
  std::size_t update_cadence = 1;
  std::size_t rounds = 1;

  void validate() const {
    if (rounds < 1) throw InvalidArgument("schedule needs at least one round");
    if (update_cadence < 1) throw InvalidArgument("update cadence must be >= 1");
    if (interval && (!std::isfinite(*interval) || !(*interval > 0.0)))
      throw InvalidArgument("schedule interval must be finite and > 0");
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct RoundRecord {
  std::size_t round = 0;
  double interval = 0.0;  // s; 0 for the initial snapshot
  double survival_round = 1.0;
  double survival_cum = 1.0;
  std::vector<double> nbar_modes;
  double nbar_total = 0.0;
  double fid_mode_a = 1.0;  // ground population of mode 0
  double fid_total = 1.0;   // ground population of all modes
  std::vector<double> teff_modes;  // K
  double mass_error = 0.0;  // |total mass - 1| after the round
};

struct RunRecord {
  std::vector<double> omegas;
  std::vector<RoundRecord> rounds;  // rounds[0] is the initial state
  /// Rounds whose interval is shorter than the previous one.
  std::vector<std::size_t> interval_decreases;

  const RoundRecord& final_round() const { return rounds.back(); }
};

struct RoundResult {
  DenseState state;
  double survival;
};

/// One round with an explicit cooling map; the map's grid may be larger than
/// the state's in every mode.
inline RoundResult apply_round(const DenseState& state, const CoolingMap& map) {
  const auto& dims = state.dims();
  if (map.grid.modes() != dims.size()) throw InvalidArgument("cooling map and state differ in mode count");
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (map.grid.dims()[k] < dims[k]) throw InvalidArgument("cooling map does not cover the state's dims");
  std::vector<double> ratios(state.entry_count());
  if (map.grid.dims() == dims) {
    ratios = map.ratios;
  } else {
    std::vector<unsigned> index(dims.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      state.grid().unflatten(i, index);
      ratios[i] = map.ratios[map.grid.flatten(index)];
    }
  }
  RoundResult out{state, 0.0};
  out.survival = out.state.apply_ratios(ratios);
  return out;
}

namespace detail {

template <DiagonalState S>
RoundRecord snapshot(const S& state, std::span<const ModeSpec> modes) {
  RoundRecord r;
  r.nbar_modes = state.means();
  r.nbar_total = std::accumulate(r.nbar_modes.begin(), r.nbar_modes.end(), 0.0);
  const std::size_t first[] = {0};
  r.fid_mode_a = state.ground_fidelity(first);
  std::vector<std::size_t> all(state.mode_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  r.fid_total = state.ground_fidelity(all);
  for (std::size_t k = 0; k < modes.size(); ++k)
    r.teff_modes.push_back(effective_temperature(std::max(0.0, r.nbar_modes[k]), modes[k].omega));
  r.mass_error = std::abs(state.total_mass() - 1.0);
  return r;
}

}  // namespace detail

/// Runs the schedule on `state` in place and returns the per-round record.
template <DiagonalState S>
RunRecord evolve(S& state, const Schedule& schedule, std::span<const ModeSpec> modes, KernelKind kind) {
  schedule.validate();
  validate_modes(modes);
  if (modes.size() != state.mode_count()) throw InvalidArgument("mode list does not match the state");
  const auto table = state.ratio_table(modes, kind);
  std::vector<double> ratios(table.size());

  RunRecord record;
  for (const auto& m : modes) record.omegas.push_back(m.omega);
  record.rounds.push_back(detail::snapshot(state, modes));

  double tau = schedule.interval ? *schedule.interval : analytic_optimal_interval(state, modes);
  double evaluated_tau = -1.0;
  double cumulative = 1.0;
  for (std::size_t i = 1; i <= schedule.rounds; ++i) {
    if (schedule.kind == ScheduleKind::iterative && i > 1 && (i - 1) % schedule.update_cadence == 0) {
      // a state that became exactly cold keeps the previous interval
      const auto rabi = thermal_rabi(state.means(), couplings_of(modes));
      if (rabi.value > 0.0) {
        const double next = analytic_optimal_interval(rabi);
        if (next < tau) record.interval_decreases.push_back(i);
        tau = next;
      }
    }
    if (tau != evaluated_tau) {
      table.evaluate(tau, ratios);
      evaluated_tau = tau;
    }
    const double survival = state.apply_ratios(ratios);
    cumulative *= survival;
    auto r = detail::snapshot(state, modes);
    r.round = i;
    r.interval = tau;
    r.survival_round = survival;
    r.survival_cum = cumulative;
    record.rounds.push_back(std::move(r));
  }
  return record;
}

template <DiagonalState S>
RunRecord run_protocol(S initial, const Schedule& schedule, std::span<const ModeSpec> modes, KernelKind kind) {
  return evolve(initial, schedule, modes, kind);
}

inline RunRecord run_protocol(JointState initial, const Schedule& schedule, std::span<const ModeSpec> modes,
                              KernelKind kind) {
  return std::visit([&](auto& s) { return evolve(s, schedule, modes, kind); }, initial);
}

struct EqualSpacingResult {
  double survival_cum = 1.0;
};

/// Final state of N equally spaced rounds in one pass (p * ratio^N / P_g).
template <DiagonalState S>
EqualSpacingResult equal_spacing_final(S& state, double tau, std::size_t rounds, std::span<const ModeSpec> modes,
                                       KernelKind kind) {
  if (rounds < 1) throw InvalidArgument("schedule needs at least one round");
  auto ratios = state.ratio_table(modes, kind).evaluate(tau);
  for (double& r : ratios) r = std::pow(r, static_cast<double>(rounds));
  return {state.apply_ratios(ratios)};
}

/// CSV with one row per round (round 0 = initial state).
inline void write_run_csv(std::ostream& out, const RunRecord& record) {
  const std::size_t K = record.omegas.size();
  out << "round,interval_s,survival_round,survival_cum,nbar_total";
  for (std::size_t k = 0; k < K; ++k) out << ",nbar_mode_" << k;
  out << ",fid_mode_a,fid_total";
  for (std::size_t k = 0; k < K; ++k) out << ",Teff_mode_" << k << "_K";
  out << '\n';
  for (const auto& r : record.rounds) {
    out << r.round << ',' << format_double(r.interval) << ',' << format_double(r.survival_round) << ','
        << format_double(r.survival_cum) << ',' << format_double(r.nbar_total);
    for (double v : r.nbar_modes) out << ',' << format_double(v);
    out << ',' << format_double(r.fid_mode_a) << ',' << format_double(r.fid_total);
    for (double v : r.teff_modes) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace mbcool
