#pragma once

// Measurement-interval selection: the reciprocal thermal Rabi rule, the small-tau
// expansion it comes from, and a brute-force scan over tau.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mbcool/cooling_kernel.hpp"
#include "mbcool/errors.hpp"
#include "mbcool/parallel.hpp"
#include "mbcool/physics.hpp"
#include "mbcool/state.hpp"

namespace mbcool {

struct ThermalRabi {
  double value = 0.0;                // rad/s
  std::vector<double> contributions;  // g_k^2 nbar_k
};

inline ThermalRabi thermal_rabi(std::span<const double> means, std::span<const double> couplings) {
  if (means.size() != couplings.size()) throw InvalidArgument("means and couplings differ in length");
  ThermalRabi out;
  double total = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (!std::isfinite(means[k]) || means[k] < 0.0) throw InvalidArgument("mean occupations must be >= 0");
    out.contributions.push_back(couplings[k] * couplings[k] * means[k]);
    total += out.contributions.back();
  }
  out.value = std::sqrt(total);
  return out;
}

inline std::vector<double> couplings_of(std::span<const ModeSpec> modes) {
  std::vector<double> out;
  for (const auto& m : modes) out.push_back(m.coupling);
  return out;
}

/// tau_opt = 1 / Omega_th.
inline double analytic_optimal_interval(const ThermalRabi& rabi) {
  if (!(rabi.value > 0.0)) throw AlreadyCold();
  return 1.0 / rabi.value;
}

template <DiagonalState S>
double analytic_optimal_interval(const S& state, std::span<const ModeSpec> modes) {
  const auto means = state.means();
  return analytic_optimal_interval(thermal_rabi(means, couplings_of(modes)));
}

/// Small-tau approximation of the total mean occupation after one successful
/// measurement. The numerator is summed exactly; the success probability in
/// the denominator is expanded in tau:
///   order 2: 1 - Omega_th^2 tau^2 sinc^2(delta tau / 2)
///   order 4: 1 - Omega_th^2 tau^2 + (<S^2> + delta^2 Omega_th^2 / 4) tau^4 / 3
/// with S = sum_k g_k^2 n_k. Valid only below tau = 1/Omega_th.
inline double perturbative_mean(double tau, const DenseState& state, std::span<const ModeSpec> modes,
                                int order = 2) {
  detail::check_tau(tau);
  if (order != 2 && order != 4) throw InvalidArgument("perturbative order must be 2 or 4");
  if (modes.size() != state.mode_count()) throw InvalidArgument("mode list does not match the state");
  require_closed_form_valid(modes);
  const auto rabi = thermal_rabi(state.means(), couplings_of(modes));
  if (rabi.value * tau >= 1.0)
    throw ExpansionDomainError("tau is at or beyond 1/Omega_th, outside the expansion's domain");
  const double delta = modes.front().detuning;
  const auto& grid = state.grid();
  const auto pops = state.populations();
  auto coupling_of = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t k = 0; k < grid.modes(); ++k)
      s += modes[k].coupling * modes[k].coupling * static_cast<double>(grid.component(i, k));
    return s;
  };
  auto excitations = [&](std::size_t i) {
    double n = 0.0;
    for (std::size_t k = 0; k < grid.modes(); ++k) n += static_cast<double>(grid.component(i, k));
    return n;
  };
  const double numerator = parallel::sum(pops.size(), [&](std::size_t i) {
    return pops[i] * excitations(i) * closed_form_ratio(coupling_of(i), delta, tau);
  });
  const double omega2 = rabi.value * rabi.value;
  double denominator;
  if (order == 2) {
    const double x = 0.5 * delta * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    denominator = 1.0 - omega2 * tau * tau * sinc * sinc;
  } else {
    const double s2 = parallel::sum(pops.size(), [&](std::size_t i) {
      const double s = coupling_of(i);
      return pops[i] * s * s;
    });
    const double t2 = tau * tau;
    denominator = 1.0 - omega2 * t2 + (s2 + 0.25 * delta * delta * omega2) * t2 * t2 / 3.0;
  }
  if (!(denominator > 0.0)) throw ExpansionDomainError("expanded success probability is not positive");
  return numerator / denominator;
}

struct ScanResult {
  std::vector<double> taus;       // s
  std::vector<double> objective;  // total mean occupation after one measurement
  double best_tau = 0.0;
  double best_objective = 0.0;
  double initial_mean = 0.0;
};

template <DiagonalState S>
double total_mean(const S& state) {
  const auto means = state.means();
  return std::accumulate(means.begin(), means.end(), 0.0);
}

/// Samples tau uniformly on [0, tau_max] (both endpoints included), then
/// refines the best sample by golden-section search on its neighbours; the
/// refined point replaces the sample only if it is strictly better. Ties
/// between samples go to the smallest tau.
template <DiagonalState S>
ScanResult scan_interval(const S& initial, std::span<const ModeSpec> modes, double tau_max, std::size_t samples,
                         KernelKind kind) {
  if (!std::isfinite(tau_max) || !(tau_max > 0.0)) throw InvalidArgument("tau_max must be finite and > 0");
  if (samples < 2) throw InvalidArgument("scan needs at least 2 samples");
  const auto table = initial.ratio_table(modes, kind);
  std::vector<double> ratios(table.size());
  auto objective = [&](double tau) {
    S trial = initial;
    table.evaluate(tau, ratios);
    trial.apply_ratios(ratios);
    return total_mean(trial);
  };

  ScanResult out;
  out.initial_mean = total_mean(initial);
  out.taus.resize(samples);
  out.objective.resize(samples);
  std::size_t best = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    out.taus[i] = tau_max * static_cast<double>(i) / static_cast<double>(samples - 1);
    out.objective[i] = objective(out.taus[i]);
    if (out.objective[i] < out.objective[best]) best = i;
  }
  out.best_tau = out.taus[best];
  out.best_objective = out.objective[best];

  double lo = out.taus[best == 0 ? 0 : best - 1];
  double hi = out.taus[best + 1 == samples ? best : best + 1];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-12 * tau_max; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double refined = f1 <= f2 ? x1 : x2;
  const double refined_value = std::min(f1, f2);
  if (refined_value < out.best_objective) {
    out.best_tau = refined;
    out.best_objective = refined_value;
  }
  return out;
}

}  // namespace mbcool
