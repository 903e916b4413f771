#pragma once

// CoolingMap construction and the per-entry ratio tables the protocol reuses
// round after round (the interval changes, the per-entry data does not).

#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mbcool/block_oracle.hpp"
#include "mbcool/cooling_kernel.hpp"
#include "mbcool/fock_grid.hpp"
#include "mbcool/parallel.hpp"

namespace mbcool {

/// Interval-independent data for evaluating |alpha|^2 over a list of entries.
class RatioTable {
 public:
  static RatioTable closed_form(std::vector<double> coupling_sums, double detuning) {
    RatioTable t;
    t.kind_ = KernelKind::closed_form;
    t.size_ = coupling_sums.size();
    t.coupling_sums_ = std::move(coupling_sums);
    t.detuning_ = detuning;
    return t;
  }

  /// Spectra are padded with zero-weight terms to a common length.
  static RatioTable oracle(std::span<const GroundSpectrum> spectra) {
    RatioTable t;
    t.kind_ = KernelKind::oracle;
    t.size_ = spectra.size();
    for (const auto& s : spectra) t.terms_ = std::max(t.terms_, s.weights.size());
    t.eigenvalues_.assign(t.size_ * t.terms_, 0.0);
    t.weights_.assign(t.size_ * t.terms_, 0.0);
    t.trivial_.assign(t.size_, 0);
    for (std::size_t i = 0; i < t.size_; ++i) {
      t.trivial_[i] = spectra[i].weights.size() == 1;
      std::copy(spectra[i].eigenvalues.begin(), spectra[i].eigenvalues.end(),
                t.eigenvalues_.begin() + static_cast<std::ptrdiff_t>(i * t.terms_));
      std::copy(spectra[i].weights.begin(), spectra[i].weights.end(),
                t.weights_.begin() + static_cast<std::ptrdiff_t>(i * t.terms_));
    }
    return t;
  }

  KernelKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return size_; }

  double ratio(std::size_t i, double tau) const {
    if (kind_ == KernelKind::closed_form) return closed_form_ratio(coupling_sums_[i], detuning_, tau);
    if (trivial_[i]) return 1.0;
    std::complex<double> amp(0.0, 0.0);
    const std::size_t base = i * terms_;
    for (std::size_t j = 0; j < terms_; ++j)
      amp += weights_[base + j] * std::polar(1.0, -eigenvalues_[base + j] * tau);
    return std::min(1.0, std::norm(amp));
  }

  void evaluate(double tau, std::span<double> out) const {
    detail::check_tau(tau);
    if (out.size() != size_) throw InvalidArgument("ratio buffer size mismatch");
    parallel::for_each_index(size_, [&](std::size_t i) { out[i] = ratio(i, tau); });
  }

  std::vector<double> evaluate(double tau) const {
    std::vector<double> out(size_);
    evaluate(tau, out);
    return out;
  }

 private:
  KernelKind kind_ = KernelKind::closed_form;
  std::size_t size_ = 0;
  std::vector<double> coupling_sums_;
  double detuning_ = 0.0;
  std::size_t terms_ = 1;
  std::vector<double> eigenvalues_;
  std::vector<double> weights_;
  std::vector<char> trivial_;
};

/// Ratio table for entries given as a flat list of multi-indices
/// (entry i occupies indices[i*K .. i*K+K-1]).
inline RatioTable prepare_ratio_table(std::span<const unsigned> indices, std::span<const ModeSpec> modes,
                                      KernelKind kind) {
  const std::size_t modes_n = modes.size();
  if (modes_n == 0 || indices.size() % modes_n != 0)
    throw InvalidArgument("index list does not match the number of modes");
  const std::size_t entries = indices.size() / modes_n;
  auto index_of = [&](std::size_t i) { return indices.subspan(i * modes_n, modes_n); };
  if (kind == KernelKind::closed_form) {
    require_closed_form_valid(modes);
    std::vector<double> sums(entries);
    parallel::for_each_index(entries, [&](std::size_t i) { sums[i] = coupling_sum(index_of(i), modes); });
    return RatioTable::closed_form(std::move(sums), modes.front().detuning);
  }
  std::vector<GroundSpectrum> spectra(entries);
  parallel::for_each_index(entries, [&](std::size_t i) {
    spectra[i] = ground_spectrum(manifold_block(index_of(i), modes));
  });
  return RatioTable::oracle(spectra);
}

inline std::vector<unsigned> grid_indices(const FockGrid& grid) {
  std::vector<unsigned> out(grid.size() * grid.modes());
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid.unflatten(i, std::span<unsigned>(out).subspan(i * grid.modes(), grid.modes()));
  return out;
}

inline RatioTable prepare_ratio_table(const FockGrid& grid, std::span<const ModeSpec> modes, KernelKind kind) {
  if (grid.modes() != modes.size()) throw InvalidArgument("grid and mode list differ in size");
  return prepare_ratio_table(grid_indices(grid), modes, kind);
}

/// Materialized diagonal of <g|U(tau)|g> over a Fock grid.
inline CoolingMap build_cooling_map(std::vector<std::size_t> dims, double tau, std::span<const ModeSpec> modes,
                                    KernelKind kind, bool with_phases = false) {
  detail::check_tau(tau);
  validate_modes(modes);
  FockGrid grid(std::move(dims));
  if (grid.modes() != modes.size()) throw InvalidArgument("grid and mode list differ in size");
  if (kind == KernelKind::closed_form) {
    require_closed_form_valid(modes);
    if (with_phases && modes.size() > 2)
      throw InvalidArgument("closed-form phases are only available for one or two modes");
  }
  CoolingMap map;
  map.interval = tau;
  map.kind = kind;
  map.grid = grid;
  map.ratios = prepare_ratio_table(grid, modes, kind).evaluate(tau);
  if (with_phases) {
    map.phases.resize(grid.size());
    parallel::for_each_index(grid.size(), [&](std::size_t i) {
      std::vector<unsigned> index(grid.modes());
      grid.unflatten(i, index);
      if (kind == KernelKind::oracle) {
        map.phases[i] = exact_ground_amplitude(index, tau, modes);
      } else if (modes.size() == 1) {
        map.phases[i] = alpha_single_mode(static_cast<int>(index[0]), tau, modes[0].coupling,
                                          modes[0].detuning);
      } else {
        map.phases[i] = alpha_two_mode(static_cast<int>(index[0]), static_cast<int>(index[1]), tau,
                                       modes[0].coupling, modes[1].coupling, modes[0].detuning);
      }
    });
  }
  return map;
}

/// Oracle-kernel map; valid for any detunings.
inline CoolingMap oracle_cooling_map(std::vector<std::size_t> dims, double tau, std::span<const ModeSpec> modes,
                                     bool with_phases = false) {
  return build_cooling_map(std::move(dims), tau, modes, KernelKind::oracle, with_phases);
}

}  // namespace mbcool
