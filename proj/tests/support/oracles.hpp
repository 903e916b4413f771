#pragma once

// Independent reference computations used only by tests: a Taylor
// scaling-and-squaring matrix exponential, the full ancilla-plus-resonators
// propagator on a small truncated space, and brute-force postselected rounds.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mbcool/fock_grid.hpp"
#include "mbcool/physics.hpp"

namespace mbcool::reference {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline double norm1(const CMatrix& a) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) best = std::max(best, a.col(j).cwiseAbs().sum());
  return best;
}

/// exp(a) by scaling to norm <= 1/2, a degree-30 Taylor sum, then squaring.
inline CMatrix expm_taylor(const CMatrix& a) {
  const double n = norm1(a);
  int squarings = 0;
  if (n > 0.5) squarings = static_cast<int>(std::ceil(std::log2(n / 0.5)));
  const CMatrix b = a / std::ldexp(1.0, squarings);
  CMatrix result = CMatrix::Identity(a.rows(), a.cols());
  CMatrix term = result;
  for (int k = 1; k <= 30; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
    if (norm1(term) < 1e-20) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// Ancilla level 0 = ground, level k+1 = excited level coupled to mode k.
/// Basis index = level * grid.size() + resonator flat index.
struct FullSpace {
  FockGrid grid;
  std::size_t levels;

  std::size_t size() const { return levels * grid.size(); }
  std::size_t index(std::size_t level, std::size_t flat) const { return level * grid.size() + flat; }
};

/// H = sum_k delta_k |k><k| + g_k (|k><g| a_k + |g><k| a_k^dagger), truncated to `dims`.
inline CMatrix full_hamiltonian(const FullSpace& space, const std::vector<ModeSpec>& modes) {
  CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(space.size()), static_cast<Eigen::Index>(space.size()));
  std::vector<unsigned> idx(space.grid.modes());
  for (std::size_t flat = 0; flat < space.grid.size(); ++flat) {
    space.grid.unflatten(flat, idx);
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto e = static_cast<Eigen::Index>(space.index(k + 1, flat));
      h(e, e) = modes[k].detuning;
      if (idx[k] == 0) continue;
      auto lower = idx;
      --lower[k];
      const auto g = static_cast<Eigen::Index>(space.index(0, flat));
      const auto el = static_cast<Eigen::Index>(space.index(k + 1, space.grid.flatten(lower)));
      const double amp = modes[k].coupling * std::sqrt(static_cast<double>(idx[k]));
      h(el, g) = amp;
      h(g, el) = amp;
    }
  }
  return h;
}

inline CMatrix full_propagator(const FullSpace& space, const std::vector<ModeSpec>& modes, double tau) {
  return expm_taylor(Complex(0.0, -tau) * full_hamiltonian(space, modes));
}

/// <g|U|g> as an operator on the resonator space.
inline CMatrix ground_block(const FullSpace& space, const CMatrix& u) {
  const auto n = static_cast<Eigen::Index>(space.grid.size());
  return u.topLeftCorner(n, n);
}

struct BruteForceRun {
  std::vector<std::vector<double>> populations;  // resonator diagonal after each round
  std::vector<double> survivals;
  double max_offdiagonal = 0.0;
};

/// Rounds of rho -> P U rho U^dagger P / tr with P = |g><g| (x) 1, starting
/// from |g><g| (x) diag(pops).
inline BruteForceRun brute_force_rounds(const FullSpace& space, const std::vector<ModeSpec>& modes,
                                        const std::vector<double>& pops, const std::vector<double>& taus) {
  const auto n = static_cast<Eigen::Index>(space.grid.size());
  CMatrix rho = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) rho(i, i) = pops[static_cast<std::size_t>(i)];
  BruteForceRun run;
  for (double tau : taus) {
    const CMatrix u = full_propagator(space, modes, tau);
    const auto full = static_cast<Eigen::Index>(space.size());
    CMatrix big = CMatrix::Zero(full, full);
    big.topLeftCorner(n, n) = rho;
    const CMatrix evolved = u * big * u.adjoint();
    CMatrix projected = evolved.topLeftCorner(n, n);
    const double survival = projected.trace().real();
    projected /= survival;
    rho = projected;
    run.survivals.push_back(survival);
    std::vector<double> diag(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      diag[static_cast<std::size_t>(i)] = rho(i, i).real();
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) run.max_offdiagonal = std::max(run.max_offdiagonal, std::abs(rho(i, j)));
    }
    run.populations.push_back(std::move(diag));
  }
  return run;
}

/// Tail mass sum_{n >= cutoff} (1 - r) r^n summed term by term.
inline double direct_tail(double omega, double temperature, std::size_t cutoff) {
  const double r = std::exp(-constants::hbar * omega / (constants::k_boltzmann * temperature));
  double tail = 0.0, term = (1.0 - r) * std::pow(r, static_cast<double>(cutoff));
  for (int i = 0; i < 200000 && term > 0.0; ++i) {
    tail += term;
    term *= r;
  }
  return tail;
}

}  // namespace mbcool::reference
