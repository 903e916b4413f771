#pragma once

// Closed-form cooling coefficients at multi-photon resonance.
//
// For a resonator product Fock state |n_1 .. n_K> and a uniform detuning d,
// one period tau of joint evolution followed by a successful ground-state
// measurement of the ancilla multiplies that state's amplitude by
//
//   alpha(tau) = e^{-i d tau/2} [cos(W tau) + i d sin(W tau) / (2 W)],
//   W = sqrt(sum_k g_k^2 n_k + d^2/4),
//
// so its population is multiplied by |alpha|^2 <= 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mbcool/errors.hpp"
#include "mbcool/fock_grid.hpp"
#include "mbcool/physics.hpp"

namespace mbcool {

enum class KernelKind { closed_form, oracle };

inline const char* to_string(KernelKind kind) {
  return kind == KernelKind::closed_form ? "closed_form" : "oracle";
}

/// Per-basis-state population-reduction ratios for one measurement interval.
struct CoolingMap {
  double interval = 0.0;  // s
  FockGrid grid;
  std::vector<double> ratios;                 // |alpha|^2, flat over grid
  std::vector<std::complex<double>> phases;   // alpha itself; empty unless requested
  KernelKind kind = KernelKind::closed_form;

  bool has_phases() const noexcept { return !phases.empty(); }
  double ratio(std::span<const unsigned> index) const { return ratios[grid.flatten(index)]; }
};

/// Multi-mode Rabi frequency for every basis state of a grid.
struct RabiSpectrum {
  FockGrid grid;
  std::vector<double> frequencies;  // rad/s
};

namespace detail {

inline void check_tau(double tau) {
  if (!std::isfinite(tau) || tau < 0.0) throw InvalidArgument("interval tau must be finite and >= 0");
}

inline void check_fock(int n, const char* name) {
  if (n < 0) throw InvalidArgument(std::string(name) + " must be a non-negative Fock number");
}

inline std::complex<double> closed_form_alpha(double coupling_sum, double detuning, double tau) {
  const double omega = std::sqrt(coupling_sum + 0.25 * detuning * detuning);
  if (omega == 0.0) return {1.0, 0.0};
  const double phase = -0.5 * detuning * tau;
  const std::complex<double> bracket(std::cos(omega * tau),
                                     detuning * std::sin(omega * tau) / (2.0 * omega));
  return std::polar(1.0, phase) * bracket;
}

}  // namespace detail

/// |alpha|^2 as a function of S = sum_k g_k^2 n_k.
///
/// Evaluated as cos^2 + (d^2/4) sin^2 / W^2, which equals
/// (W^2 - S sin^2) / W^2 without the cancellation near the nodes of cos.
inline double closed_form_ratio(double coupling_sum, double detuning, double tau) {
  if (coupling_sum == 0.0) return 1.0;
  const double quarter = 0.25 * detuning * detuning;
  const double omega2 = coupling_sum + quarter;
  const double omega = std::sqrt(omega2);
  const double s = std::sin(omega * tau);
  const double c = std::cos(omega * tau);
  return std::min(1.0, c * c + quarter * s * s / omega2);
}

inline double rabi_two_mode(int n, int m, double g_a, double g_b, double delta) {
  detail::check_fock(n, "n");
  detail::check_fock(m, "m");
  return std::sqrt(g_a * g_a * n + g_b * g_b * m + 0.25 * delta * delta);
}

/// Requires two-photon resonance (delta_e = delta_f = delta); use the block
/// oracle for anything else.
inline std::complex<double> alpha_two_mode(int n, int m, double tau, double g_a, double g_b,
                                           double delta) {
  detail::check_fock(n, "n");
  detail::check_fock(m, "m");
  detail::check_tau(tau);
  if (n == 0 && m == 0) return {1.0, 0.0};
  return detail::closed_form_alpha(g_a * g_a * n + g_b * g_b * m, delta, tau);
}

inline std::complex<double> alpha_single_mode(int n, double tau, double g, double delta) {
  detail::check_fock(n, "n");
  detail::check_tau(tau);
  if (n == 0) return {1.0, 0.0};
  return detail::closed_form_alpha(g * g * n, delta, tau);
}

/// |alpha_K|^2 for a K-mode product Fock state at uniform detuning.
inline double alpha_multi_mode(std::span<const int> fock, double tau, std::span<const double> couplings,
                               double detuning) {
  if (fock.size() != couplings.size())
    throw InvalidArgument("Fock index and coupling vectors differ in length");
  detail::check_tau(tau);
  double coupling_sum = 0.0;
  for (std::size_t k = 0; k < fock.size(); ++k) {
    detail::check_fock(fock[k], "n_k");
    coupling_sum += couplings[k] * couplings[k] * fock[k];
  }
  return closed_form_ratio(coupling_sum, detuning, tau);
}

/// sum_k g_k^2 n_k for a grid multi-index.
inline double coupling_sum(std::span<const unsigned> index, std::span<const ModeSpec> modes) {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k)
    s += modes[k].coupling * modes[k].coupling * static_cast<double>(index[k]);
  return s;
}

inline void require_closed_form_valid(std::span<const ModeSpec> modes) {
  if (!detunings_uniform(modes))
    throw KernelMismatch(
        "closed-form kernel needs equal detunings on every mode; use the oracle kernel");
}

inline RabiSpectrum rabi_spectrum(const FockGrid& grid, std::span<const ModeSpec> modes) {
  if (grid.modes() != modes.size()) throw InvalidArgument("grid and mode list differ in size");
  require_closed_form_valid(modes);
  const double delta = modes.front().detuning;
  RabiSpectrum out{grid, std::vector<double>(grid.size())};
  std::vector<unsigned> index(grid.modes());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.unflatten(i, index);
    out.frequencies[i] = std::sqrt(coupling_sum(index, modes) + 0.25 * delta * delta);
  }
  return out;
}

}  // namespace mbcool
