#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "mbcool/block_oracle.hpp"
#include "mbcool/cooling_kernel.hpp"
#include "mbcool/cooling_map.hpp"
#include "support/oracles.hpp"

using namespace mbcool;

namespace {

constexpr double kOmegaA = 1.4e9;
constexpr double kG = 0.04 * kOmegaA;
constexpr double kDelta = 0.01 * kOmegaA;

std::vector<ModeSpec> two_modes(double delta_f = kDelta) {
  return {{kOmegaA, kG, kDelta, 0.1}, {1.2 * kOmegaA, kG, delta_f, 0.1}};
}

}  // namespace

TEST(ClosedForm, FrozenAmplitude) {
  // 40-digit evaluation, n = 3, m = 2, tau = 6 / omega_a
  const auto a = alpha_two_mode(3, 2, 6.0 / kOmegaA, kG, kG, kDelta);
  EXPECT_NEAR(a.real(), 0.85946495600023963, 1e-13);
  EXPECT_NEAR(a.imag(), 0.0027974003239723441, 1e-13);
  EXPECT_NEAR(std::norm(a), 0.73868783604106641, 1e-13);
}

TEST(ClosedForm, GroundIsExactlyOne) {
  EXPECT_EQ(alpha_two_mode(0, 0, 3.0 / kOmegaA, kG, kG, kDelta), std::complex<double>(1.0, 0.0));
  EXPECT_EQ(alpha_single_mode(0, 3.0 / kOmegaA, kG, kDelta), std::complex<double>(1.0, 0.0));
  EXPECT_EQ(closed_form_ratio(0.0, kDelta, 1e-6), 1.0);
}

TEST(ClosedForm, ZeroIntervalIsIdentity) {
  for (int n = 0; n < 5; ++n)
    for (int m = 0; m < 5; ++m) EXPECT_EQ(std::norm(alpha_two_mode(n, m, 0.0, kG, kG, kDelta)), 1.0);
}

TEST(ClosedForm, ResonantSingleModeIsCosine) {
  const double tau = 2.3 / kOmegaA;
  for (int n = 1; n < 10; ++n) {
    const double c = std::cos(kG * std::sqrt(double(n)) * tau);
    EXPECT_NEAR(std::norm(alpha_single_mode(n, tau, kG, 0.0)), c * c, 1e-14);
  }
}

TEST(ClosedForm, RatioInUnitInterval) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> tau(0.0, 200.0 / kOmegaA);
  for (int i = 0; i < 2000; ++i) {
    const int n = static_cast<int>(rng() % 300), m = static_cast<int>(rng() % 300);
    const double r = std::norm(alpha_two_mode(n, m, tau(rng), kG, kG, kDelta));
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0 + 1e-15);
  }
}

TEST(ClosedForm, MultiModeReducesToTwoMode) {
  const int fock[] = {4, 7};
  const double g[] = {kG, 0.5 * kG};
  const double tau = 5.5 / kOmegaA;
  EXPECT_NEAR(alpha_multi_mode(fock, tau, g, kDelta), std::norm(alpha_two_mode(4, 7, tau, kG, 0.5 * kG, kDelta)),
              1e-14);
  const double short_g[] = {kG};
  EXPECT_THROW(alpha_multi_mode(fock, tau, short_g, kDelta), InvalidArgument);
}

TEST(ClosedForm, ArgumentChecks) {
  EXPECT_THROW(alpha_two_mode(-1, 0, 1e-9, kG, kG, kDelta), InvalidArgument);
  EXPECT_THROW(alpha_two_mode(1, 0, -1e-9, kG, kG, kDelta), InvalidArgument);
  EXPECT_THROW(rabi_two_mode(0, -2, kG, kG, kDelta), InvalidArgument);
}

TEST(ClosedForm, RabiFrequency) {
  EXPECT_NEAR(rabi_two_mode(3, 2, kG, kG, kDelta), std::sqrt(5 * kG * kG + 0.25 * kDelta * kDelta), 1e-6);
  const auto modes = two_modes();
  const auto rabi = rabi_spectrum(FockGrid({3, 3}), modes);
  EXPECT_DOUBLE_EQ(rabi.frequencies[0], 0.5 * kDelta);
}

TEST(BlockOracle, MatchesClosedFormAtEqualDetunings) {
  const auto modes = two_modes();
  for (unsigned n = 0; n <= 12; ++n)
    for (unsigned m = 0; m <= 12; ++m)
      for (double t : {0.7, 6.2, 31.0}) {
        const unsigned idx[] = {n, m};
        const auto oracle = exact_ground_amplitude(idx, t / kOmegaA, modes);
        const auto closed = alpha_two_mode(int(n), int(m), t / kOmegaA, kG, kG, kDelta);
        EXPECT_LT(std::abs(oracle - closed), 1e-11) << n << "," << m << "," << t;
      }
}

TEST(BlockOracle, FrozenUnequalDetuning) {
  // 40-digit expm of the 3x3 manifold, n = 3, m = 2, delta_f = 3 delta_e
  const auto modes = two_modes(3 * kDelta);
  const unsigned idx[] = {3, 2};
  const auto a = exact_ground_amplitude(idx, 6.0 / kOmegaA, modes);
  EXPECT_NEAR(a.real(), 0.85959948482174027, 1e-12);
  EXPECT_NEAR(a.imag(), 0.0050304563845025097, 1e-12);
}

TEST(BlockOracle, AgreesWithTaylorExponential) {
  const auto modes = two_modes(2.5 * kDelta);
  for (unsigned n : {0u, 1u, 5u, 40u})
    for (unsigned m : {0u, 3u, 17u}) {
      const unsigned idx[] = {n, m};
      const auto block = manifold_block(idx, modes);
      const double tau = 9.0 / kOmegaA;
      const reference::CMatrix u =
          reference::expm_taylor(std::complex<double>(0.0, -tau) * block.matrix.cast<std::complex<double>>());
      EXPECT_LT(std::abs(u(0, 0) - exact_ground_amplitude(idx, tau, modes)), 1e-11);
    }
}

TEST(BlockOracle, BlockShape) {
  const auto modes = two_modes(2 * kDelta);
  const unsigned idx[] = {0, 4};
  const auto block = manifold_block(idx, modes);
  ASSERT_EQ(block.dimension(), 2u);
  EXPECT_EQ(block.levels[1], 2u);
  EXPECT_DOUBLE_EQ(block.matrix(0, 1), 2.0 * kG);
  EXPECT_DOUBLE_EQ(block.matrix(1, 1), 2 * kDelta);
  const unsigned ground[] = {0, 0};
  EXPECT_EQ(manifold_block(ground, modes).dimension(), 1u);
  const unsigned too_long[] = {1, 1, 1};
  EXPECT_THROW(manifold_block(too_long, modes), InvalidArgument);
}

TEST(BlockOracle, WeightsSumToOne) {
  const auto modes = two_modes(4 * kDelta);
  const unsigned idx[] = {7, 9};
  const auto s = ground_spectrum(manifold_block(idx, modes));
  double total = 0.0;
  for (double w : s.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(CoolingMap, GroundRatioExactlyOneAndRange) {
  const auto modes = two_modes();
  for (auto kind : {KernelKind::closed_form, KernelKind::oracle}) {
    const auto map = build_cooling_map({20, 20}, 6.2 / kOmegaA, modes, kind);
    EXPECT_EQ(map.ratios[0], 1.0);
    for (double r : map.ratios) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
}

TEST(CoolingMap, ClosedFormRejectsUnequalDetunings) {
  EXPECT_THROW(build_cooling_map({4, 4}, 1e-9, two_modes(2 * kDelta), KernelKind::closed_form), KernelMismatch);
  EXPECT_NO_THROW(oracle_cooling_map({4, 4}, 1e-9, two_modes(2 * kDelta)));
}

TEST(CoolingMap, PhasesMatchRatios) {
  const auto modes = two_modes();
  const auto map = build_cooling_map({6, 5}, 4.0 / kOmegaA, modes, KernelKind::closed_form, true);
  ASSERT_TRUE(map.has_phases());
  for (std::size_t i = 0; i < map.ratios.size(); ++i) EXPECT_NEAR(std::norm(map.phases[i]), map.ratios[i], 1e-14);
  const auto oracle = oracle_cooling_map({6, 5}, 4.0 / kOmegaA, modes, true);
  for (std::size_t i = 0; i < map.ratios.size(); ++i) EXPECT_LT(std::abs(oracle.phases[i] - map.phases[i]), 1e-12);
}

TEST(CoolingMap, DiagonalityOnFullMicroSpace) {
  // <g|U|g> must be diagonal in the product Fock basis, for any detunings
  for (double df : {1.0, 3.0}) {
    const auto modes = two_modes(df * kDelta);
    reference::FullSpace space{FockGrid({4, 4}), 3};
    const double tau = 6.2 / kOmegaA;
    const auto block = reference::ground_block(space, reference::full_propagator(space, modes, tau));
    const auto map = oracle_cooling_map({4, 4}, tau, modes, true);
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        if (i == j)
          EXPECT_LT(std::abs(block(i, i) - map.phases[std::size_t(i)]), 1e-12);
        else
          EXPECT_LT(std::abs(block(i, j)), 1e-12);
      }
  }
}

TEST(RatioTable, SparseIndicesMatchGrid) {
  const auto modes = two_modes(2 * kDelta);
  const unsigned idx[] = {3, 1, 0, 0, 5, 2};
  const auto table = prepare_ratio_table(idx, modes, KernelKind::oracle);
  const auto map = oracle_cooling_map({6, 3}, 3.0 / kOmegaA, modes);
  const auto r = table.evaluate(3.0 / kOmegaA);
  const unsigned a[] = {3, 1}, b[] = {0, 0}, c[] = {5, 2};
  EXPECT_NEAR(r[0], map.ratio(a), 1e-15);
  EXPECT_EQ(r[1], map.ratio(b));
  EXPECT_NEAR(r[2], map.ratio(c), 1e-15);
}
