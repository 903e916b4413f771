#pragma once

// Thermal-state construction, Fock-basis truncation and unit conventions.
//
// Computation uses SI angular frequencies (rad/s) and seconds; hbar only
// enters when converting between a temperature and a mode occupation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mbcool/errors.hpp"

namespace mbcool {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;   // J s, CODATA 2018
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K, exact SI
}  // namespace constants

/// Largest number of resonator modes a joint state may hold.
inline constexpr std::size_t kMaxModes = 8;

/// One resonator mode and its coupling to the ancilla.
struct ModeSpec {
  double omega = 0.0;        // rad/s
  double coupling = 0.0;     // g_k, rad/s
  double detuning = 0.0;     // delta_k, rad/s
  double temperature = 0.0;  // K

  void validate() const {
    if (!std::isfinite(omega) || omega <= 0.0)
      throw InvalidArgument("mode omega must be finite and > 0");
    if (!std::isfinite(coupling) || coupling < 0.0)
      throw InvalidArgument("mode coupling must be finite and >= 0");
    if (!std::isfinite(detuning))
      throw InvalidArgument("mode detuning must be finite");
    if (!std::isfinite(temperature) || temperature < 0.0)
      throw InvalidArgument("mode temperature must be finite and >= 0");
  }

  friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

struct TruncationPolicy {
  double tail_epsilon = 1e-12;
  std::size_t hard_cap = 1024;

  void validate() const {
    if (!(tail_epsilon > 0.0 && tail_epsilon < 1.0))
      throw InvalidArgument("tail_epsilon must lie in (0, 1)");
    if (hard_cap < 1) throw InvalidArgument("hard_cap must be >= 1");
  }

  friend bool operator==(const TruncationPolicy&, const TruncationPolicy&) = default;
};

/// Truncated, renormalized Bose-Einstein populations of one mode.
struct ThermalPopulations {
  std::vector<double> populations;  // p_n, n = 0 .. size-1
  double mean_occupation = 0.0;

  std::size_t cutoff() const noexcept { return populations.size(); }
};

namespace detail {

inline void check_omega_temperature(double omega, double temperature) {
  if (!std::isfinite(omega) || omega <= 0.0)
    throw InvalidArgument("omega must be finite and > 0");
  if (!std::isfinite(temperature) || temperature < 0.0)
    throw InvalidArgument("temperature must be finite and >= 0");
}

/// hbar*omega / (k_B*T); only meaningful for T > 0.
inline double boltzmann_exponent(double omega, double temperature) {
  return constants::hbar * omega / (constants::k_boltzmann * temperature);
}

}  // namespace detail

/// Mean thermal occupation 1/(exp(hbar w / k_B T) - 1); exactly 0 at T = 0.
inline double bose_einstein_occupation(double omega, double temperature) {
  detail::check_omega_temperature(omega, temperature);
  if (temperature == 0.0) return 0.0;
  return 1.0 / std::expm1(detail::boltzmann_exponent(omega, temperature));
}

/// Number of retained Fock states n = 0..cutoff-1: the smallest cutoff whose
/// Boltzmann tail mass r^cutoff falls below tail_epsilon (r = e^{-hbar w/k_B T}).
inline std::size_t choose_truncation(double omega, double temperature,
                                     const TruncationPolicy& policy) {
  detail::check_omega_temperature(omega, temperature);
  policy.validate();
  if (temperature == 0.0) return 1;
  const double x = detail::boltzmann_exponent(omega, temperature);
  const double log_eps = std::log(policy.tail_epsilon);
  // tail(N) = exp(-x N) < eps  <=>  N > -log(eps)/x
  const double bound = -log_eps / x;
  if (!(bound < static_cast<double>(policy.hard_cap))) {
    const double needed = std::floor(bound) + 1.0;
    const auto required = needed < 1e18 ? static_cast<std::size_t>(needed)
                                         : static_cast<std::size_t>(-1);
    throw TruncationOverflow(required, policy.hard_cap);
  }
  auto cutoff = static_cast<std::size_t>(std::floor(bound)) + 1;
  // floor() can land one off when bound is within rounding of an integer
  while (cutoff > 1 && -x * static_cast<double>(cutoff - 1) < log_eps) --cutoff;
  while (-x * static_cast<double>(cutoff) >= log_eps) ++cutoff;
  if (cutoff > policy.hard_cap) throw TruncationOverflow(cutoff, policy.hard_cap);
  return cutoff;
}

inline ThermalPopulations thermal_populations(double omega, double temperature,
                                              const TruncationPolicy& policy) {
  const std::size_t cutoff = choose_truncation(omega, temperature, policy);
  ThermalPopulations out;
  out.populations.resize(cutoff);
  if (temperature == 0.0 || cutoff == 1) {
    out.populations.assign(cutoff, 0.0);
    out.populations[0] = 1.0;
    out.mean_occupation = 0.0;
    return out;
  }
  const double x = detail::boltzmann_exponent(omega, temperature);
  double total = 0.0;
  for (std::size_t n = 0; n < cutoff; ++n) {
    out.populations[n] = std::exp(-x * static_cast<double>(n));
    total += out.populations[n];
  }
  double mean = 0.0;
  for (std::size_t n = 0; n < cutoff; ++n) {
    out.populations[n] /= total;
    mean += static_cast<double>(n) * out.populations[n];
  }
  out.mean_occupation = mean;
  return out;
}

inline ThermalPopulations thermal_populations(const ModeSpec& mode,
                                              const TruncationPolicy& policy) {
  mode.validate();
  return thermal_populations(mode.omega, mode.temperature, policy);
}

/// Temperature whose Bose-Einstein occupation equals `mean_occupation`.
/// A zero mean maps to 0 K (the T -> 0 limit).
inline double effective_temperature(double mean_occupation, double omega) {
  if (!std::isfinite(omega) || omega <= 0.0)
    throw InvalidArgument("omega must be finite and > 0");
  if (!std::isfinite(mean_occupation) || mean_occupation < 0.0)
    throw InvalidArgument("mean occupation must be finite and >= 0");
  if (mean_occupation == 0.0) return 0.0;
  return constants::hbar * omega /
         (constants::k_boltzmann * std::log1p(1.0 / mean_occupation));
}

inline void validate_modes(std::span<const ModeSpec> modes) {
  if (modes.empty()) throw InvalidArgument("at least one mode is required");
  if (modes.size() > kMaxModes)
    throw InvalidArgument("at most " + std::to_string(kMaxModes) + " modes are supported");
  for (const auto& m : modes) m.validate();
}

/// True when every detuning equals the first within 1e-12 relative.
inline bool detunings_uniform(std::span<const ModeSpec> modes) {
  if (modes.empty()) return true;
  const double ref = modes.front().detuning;
  for (const auto& m : modes) {
    const double scale = std::max(std::abs(ref), std::abs(m.detuning));
    if (std::abs(m.detuning - ref) > 1e-12 * scale) return false;
  }
  return true;
}

}  // namespace mbcool
