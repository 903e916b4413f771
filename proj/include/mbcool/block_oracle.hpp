#pragma once

// Exact ground-state amplitude <g|exp(-i H tau)|g> per excitation manifold.
//
// The rotating-frame Hamiltonian never changes the total excitation count, so
// |g, n_1..n_K> only mixes with |k, .., n_k - 1, ..> for modes with n_k >= 1.
// That closed manifold is at most (K+1)-dimensional and real symmetric; its
// eigendecomposition gives the amplitude for any set of detunings.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "mbcool/cooling_kernel.hpp"
#include "mbcool/errors.hpp"
#include "mbcool/physics.hpp"

namespace mbcool {

struct ManifoldBlock {
  std::vector<unsigned> index;      // resonator Fock numbers of the ground-sector row
  std::vector<std::size_t> levels;  // per row: 0 = ancilla ground, k+1 = excited level of mode k
  Eigen::MatrixXd matrix;           // rad/s

  std::size_t dimension() const noexcept { return levels.size(); }
};

/// Eigenvalues of a block and the weights |<row 0|v_j>|^2.
struct GroundSpectrum {
  std::vector<double> eigenvalues;
  std::vector<double> weights;
};

inline ManifoldBlock manifold_block(std::span<const unsigned> index, std::span<const ModeSpec> modes) {
  if (index.size() != modes.size()) throw InvalidArgument("index and mode list differ in size");
  ManifoldBlock block;
  block.index.assign(index.begin(), index.end());
  block.levels.push_back(0);
  for (std::size_t k = 0; k < index.size(); ++k)
    if (index[k] >= 1) block.levels.push_back(k + 1);
  const auto dim = static_cast<Eigen::Index>(block.levels.size());
  block.matrix = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index r = 1; r < dim; ++r) {
    const std::size_t k = block.levels[static_cast<std::size_t>(r)] - 1;
    const double hop = modes[k].coupling * std::sqrt(static_cast<double>(index[k]));
    block.matrix(r, r) = modes[k].detuning;
    block.matrix(0, r) = hop;
    block.matrix(r, 0) = hop;
  }
  return block;
}

inline GroundSpectrum ground_spectrum(const ManifoldBlock& block) {
  if (block.dimension() == 1) return {{block.matrix(0, 0)}, {1.0}};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block.matrix);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigendecomposition failed for manifold block at index (";
    for (std::size_t k = 0; k < block.index.size(); ++k) msg << (k ? "," : "") << block.index[k];
    msg << "), dimension " << block.dimension() << ", matrix\n" << block.matrix;
    throw NumericError(msg.str());
  }
  GroundSpectrum out;
  const auto dim = block.matrix.rows();
  out.eigenvalues.resize(static_cast<std::size_t>(dim));
  out.weights.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double v0 = solver.eigenvectors()(0, j);
    out.eigenvalues[static_cast<std::size_t>(j)] = solver.eigenvalues()(j);
    out.weights[static_cast<std::size_t>(j)] = v0 * v0;
  }
  return out;
}

inline std::complex<double> ground_amplitude(const GroundSpectrum& spectrum, double tau) {
  std::complex<double> amp(0.0, 0.0);
  for (std::size_t j = 0; j < spectrum.weights.size(); ++j)
    amp += spectrum.weights[j] * std::polar(1.0, -spectrum.eigenvalues[j] * tau);
  return amp;
}

inline double ground_ratio(const GroundSpectrum& spectrum, double tau) {
  if (spectrum.weights.size() == 1) return 1.0;
  return std::min(1.0, std::norm(ground_amplitude(spectrum, tau)));
}

inline std::complex<double> exact_ground_amplitude(std::span<const unsigned> index, double tau,
                                                   std::span<const ModeSpec> modes) {
  detail::check_tau(tau);
  if (tau == 0.0) return {1.0, 0.0};
  const auto spectrum = ground_spectrum(manifold_block(index, modes));
  if (spectrum.weights.size() == 1) return std::polar(1.0, -spectrum.eigenvalues[0] * tau);
  return ground_amplitude(spectrum, tau);
}

}  // namespace mbcool
