#pragma once

// Diagonal joint states of K resonator modes.
//
// The protocol maps diagonal states to diagonal states, so only populations
// over the product Fock basis are stored. Three storages share one interface:
//
//   DenseState   every product basis state on a FockGrid (K <= 2 in practice)
//   ShellState   exact compressed form for the closed-form kernel: modes with
//                equal couplings are grouped and the state is kept as a mass
//                per vector of group excitation totals ("shell"); within a
//                shell the thermal conditional distribution never changes,
//                because the cooling ratio depends only on sum_k g_k^2 n_k
//   SparseState  explicit multi-index -> population map, pruned to the most
//                probable product states (any kernel, any K)

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mbcool/cooling_map.hpp"
#include "mbcool/errors.hpp"
#include "mbcool/fock_grid.hpp"
#include "mbcool/parallel.hpp"
#include "mbcool/physics.hpp"

namespace mbcool {

namespace detail {

inline std::vector<std::size_t> checked_subset(std::span<const std::size_t> subset, std::size_t modes) {
  if (subset.empty()) throw InvalidArgument("ground fidelity needs a non-empty mode subset");
  std::vector<std::size_t> out(subset.begin(), subset.end());
  for (auto k : out)
    if (k >= modes) throw InvalidArgument("mode index " + std::to_string(k) + " out of range");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void check_mode(std::size_t mode, std::size_t modes) {
  if (mode >= modes) throw InvalidArgument("mode index " + std::to_string(mode) + " out of range");
}

inline void check_populations(std::span<const double> pops) {
  double total = 0.0;
  for (double p : pops) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidArgument("populations must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-10) throw InvalidArgument("populations must sum to 1");
}

/// Multiplies by the ratios, returns the pre-normalization mass and renormalizes.
inline double multiply_and_renormalize(std::span<double> pops, std::span<const double> ratios) {
  if (ratios.size() != pops.size())
    throw InvalidArgument("cooling ratios do not match the state's entries");
  const double survival = parallel::sum(pops.size(), [&](std::size_t i) { return pops[i] * ratios[i]; });
  if (!(survival > 0.0) || !std::isfinite(survival))
    throw NumericError("measurement round removed all population (survival probability is zero)");
  parallel::for_each_index(pops.size(), [&](std::size_t i) { pops[i] = pops[i] * ratios[i] / survival; });
  return survival;
}

inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace detail

class DenseState {
 public:
  DenseState(std::vector<std::size_t> dims, std::vector<double> populations)
      : grid_(std::move(dims)), pops_(std::move(populations)) {
    if (pops_.size() != grid_.size()) throw InvalidArgument("population count does not match dims");
    detail::check_populations(pops_);
  }

  const FockGrid& grid() const noexcept { return grid_; }
  const std::vector<std::size_t>& dims() const noexcept { return grid_.dims(); }
  std::size_t mode_count() const noexcept { return grid_.modes(); }
  std::size_t entry_count() const noexcept { return pops_.size(); }
  std::span<const double> populations() const noexcept { return pops_; }

  double total_mass() const {
    return parallel::sum(pops_.size(), [&](std::size_t i) { return pops_[i]; });
  }

  double population(std::span<const unsigned> index) const {
    return grid_.contains(index) ? pops_[grid_.flatten(index)] : 0.0;
  }

  double mean_occupation(std::size_t mode) const {
    detail::check_mode(mode, mode_count());
    return parallel::sum(pops_.size(), [&](std::size_t i) {
      return pops_[i] * static_cast<double>(grid_.component(i, mode));
    });
  }

  std::vector<double> means() const {
    std::vector<double> out(mode_count());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = mean_occupation(k);
    return out;
  }

  double ground_fidelity(std::span<const std::size_t> subset) const {
    const auto modes = detail::checked_subset(subset, mode_count());
    return parallel::sum(pops_.size(), [&](std::size_t i) {
      for (auto k : modes)
        if (grid_.component(i, k) != 0) return 0.0;
      return pops_[i];
    });
  }

  double apply_ratios(std::span<const double> ratios) { return detail::multiply_and_renormalize(pops_, ratios); }

  RatioTable ratio_table(std::span<const ModeSpec> modes, KernelKind kind) const {
    return prepare_ratio_table(grid_, modes, kind);
  }

 private:
  FockGrid grid_;
  std::vector<double> pops_;
};

/// Product of the single-mode thermal states on a dense grid.
inline DenseState joint_state_from_thermal(std::span<const ModeSpec> modes, const TruncationPolicy& policy) {
  validate_modes(modes);
  std::vector<std::vector<double>> marginals;
  std::vector<std::size_t> dims;
  for (const auto& m : modes) {
    marginals.push_back(thermal_populations(m, policy).populations);
    dims.push_back(marginals.back().size());
  }
  FockGrid grid(dims);
  constexpr std::size_t kDenseLimit = 100'000'000;
  if (grid.size() > kDenseLimit)
    throw InvalidArgument("dense joint state would hold " + std::to_string(grid.size()) +
                          " entries; use the shell or sparse storage");
  std::vector<double> pops(grid.size());
  parallel::for_each_index(grid.size(), [&](std::size_t i) {
    double p = 1.0;
    for (std::size_t k = 0; k < grid.modes(); ++k) p *= marginals[k][grid.component(i, k)];
    pops[i] = p;
  });
  return DenseState(std::move(dims), std::move(pops));
}

class ShellState {
 public:
  /// Requires uniform detunings: the shell form is exact only for the closed-form kernel.
  static ShellState thermal(std::span<const ModeSpec> modes, const TruncationPolicy& policy) {
    validate_modes(modes);
    require_closed_form_valid(modes);
    ShellState s;
    for (const auto& m : modes) s.mode_pops_.push_back(thermal_populations(m, policy).populations);
    s.group_of_.resize(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) {
      auto it = std::find(s.group_coupling_.begin(), s.group_coupling_.end(), modes[k].coupling);
      if (it == s.group_coupling_.end()) {
        s.group_coupling_.push_back(modes[k].coupling);
        s.group_members_.emplace_back();
        it = s.group_coupling_.end() - 1;
      }
      const auto g = static_cast<std::size_t>(it - s.group_coupling_.begin());
      s.group_of_[k] = g;
      s.group_members_[g].push_back(k);
    }
    std::vector<std::size_t> shell_dims;
    for (const auto& members : s.group_members_) {
      std::vector<double> dist{1.0};
      for (auto k : members) dist = detail::convolve(dist, s.mode_pops_[k]);
      s.group_dist_.push_back(std::move(dist));
      shell_dims.push_back(s.group_dist_.back().size());
    }
    s.shells_ = FockGrid(shell_dims);
    constexpr std::size_t kShellLimit = 50'000'000;
    if (s.shells_.size() > kShellLimit)
      throw TruncationOverflow(s.shells_.size(), kShellLimit);

    // E[n_k | group total M] under the thermal prior; cooling leaves it unchanged.
    s.conditional_mean_.resize(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto g = s.group_of_[k];
      std::vector<double> moment(s.mode_pops_[k].size());
      for (std::size_t n = 0; n < moment.size(); ++n) moment[n] = static_cast<double>(n) * s.mode_pops_[k][n];
      std::vector<double> acc = moment;
      for (auto j : s.group_members_[g])
        if (j != k) acc = detail::convolve(acc, s.mode_pops_[j]);
      auto& cm = s.conditional_mean_[k];
      cm.resize(s.group_dist_[g].size());
      for (std::size_t M = 0; M < cm.size(); ++M)
        cm[M] = s.group_dist_[g][M] > 0.0 ? acc[M] / s.group_dist_[g][M] : 0.0;
    }

    s.mass_.resize(s.shells_.size());
    for (std::size_t i = 0; i < s.shells_.size(); ++i) {
      double p = 1.0;
      for (std::size_t g = 0; g < s.group_dist_.size(); ++g) p *= s.group_dist_[g][s.shells_.component(i, g)];
      s.mass_[i] = p;
    }
    return s;
  }

  std::size_t mode_count() const noexcept { return group_of_.size(); }
  /// Number of shells (the stored entries).
  std::size_t entry_count() const noexcept { return mass_.size(); }
  const FockGrid& shell_grid() const noexcept { return shells_; }
  std::size_t group_count() const noexcept { return group_members_.size(); }
  std::span<const double> shell_masses() const noexcept { return mass_; }

  std::vector<std::size_t> mode_dims() const {
    std::vector<std::size_t> out;
    for (const auto& p : mode_pops_) out.push_back(p.size());
    return out;
  }

  double total_mass() const {
    return parallel::sum(mass_.size(), [&](std::size_t i) { return mass_[i]; });
  }

  double population(std::span<const unsigned> index) const {
    if (index.size() != mode_count()) throw InvalidArgument("index length does not match mode count");
    std::vector<unsigned> totals(group_count(), 0);
    double prior = 1.0;
    for (std::size_t k = 0; k < index.size(); ++k) {
      if (index[k] >= mode_pops_[k].size()) return 0.0;
      prior *= mode_pops_[k][index[k]];
      totals[group_of_[k]] += index[k];
    }
    double shell_prior = 1.0;
    for (std::size_t g = 0; g < group_count(); ++g) shell_prior *= group_dist_[g][totals[g]];
    if (shell_prior == 0.0) return 0.0;
    return mass_[shells_.flatten(totals)] * prior / shell_prior;
  }

  double mean_occupation(std::size_t mode) const {
    detail::check_mode(mode, mode_count());
    const auto g = group_of_[mode];
    const auto& cm = conditional_mean_[mode];
    return parallel::sum(mass_.size(), [&](std::size_t i) { return mass_[i] * cm[shells_.component(i, g)]; });
  }

  std::vector<double> means() const {
    std::vector<double> out(mode_count());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = mean_occupation(k);
    return out;
  }

  double ground_fidelity(std::span<const std::size_t> subset) const {
    const auto chosen = detail::checked_subset(subset, mode_count());
    // P(n_j = 0 for chosen j in group | group total M), per group
    std::vector<std::vector<double>> conditional(group_count());
    for (std::size_t g = 0; g < group_count(); ++g) {
      std::vector<double> dist{1.0};
      for (auto k : group_members_[g]) {
        if (std::binary_search(chosen.begin(), chosen.end(), k))
          dist = detail::convolve(dist, std::span<const double>(mode_pops_[k]).first(1));
        else
          dist = detail::convolve(dist, mode_pops_[k]);
      }
      conditional[g].assign(group_dist_[g].size(), 0.0);
      for (std::size_t M = 0; M < dist.size(); ++M)
        conditional[g][M] = group_dist_[g][M] > 0.0 ? dist[M] / group_dist_[g][M] : 0.0;
    }
    return parallel::sum(mass_.size(), [&](std::size_t i) {
      double p = mass_[i];
      for (std::size_t g = 0; g < group_count(); ++g) p *= conditional[g][shells_.component(i, g)];
      return p;
    });
  }

  double apply_ratios(std::span<const double> ratios) { return detail::multiply_and_renormalize(mass_, ratios); }

  RatioTable ratio_table(std::span<const ModeSpec> modes, KernelKind kind) const {
    if (kind != KernelKind::closed_form)
      throw KernelMismatch("shell storage only supports the closed-form kernel");
    if (modes.size() != mode_count()) throw InvalidArgument("mode list does not match the state");
    require_closed_form_valid(modes);
    for (std::size_t k = 0; k < modes.size(); ++k)
      if (modes[k].coupling != group_coupling_[group_of_[k]])
        throw InvalidArgument("mode couplings differ from those the shell state was built with");
    std::vector<double> sums(mass_.size());
    parallel::for_each_index(mass_.size(), [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t g = 0; g < group_count(); ++g)
        s += group_coupling_[g] * group_coupling_[g] * static_cast<double>(shells_.component(i, g));
      sums[i] = s;
    });
    return RatioTable::closed_form(std::move(sums), modes.front().detuning);
  }

 private:
  ShellState() = default;

  std::vector<std::vector<double>> mode_pops_;
  std::vector<std::size_t> group_of_;
  std::vector<std::vector<std::size_t>> group_members_;
  std::vector<double> group_coupling_;
  std::vector<std::vector<double>> group_dist_;
  std::vector<std::vector<double>> conditional_mean_;
  FockGrid shells_;
  std::vector<double> mass_;
};

struct SparsePolicy {
  /// Thermal mass allowed to be dropped from the joint product; 0 keeps everything.
  double joint_tail_epsilon = 1e-6;
  std::size_t max_entries = 20'000'000;

  void validate() const {
    if (!(joint_tail_epsilon >= 0.0 && joint_tail_epsilon < 1.0))
      throw InvalidArgument("joint_tail_epsilon must lie in [0, 1)");
    if (max_entries < 1) throw InvalidArgument("max_entries must be >= 1");
  }
};

class SparseState {
 public:
  /// Entries are given as a flat index list (K numbers per entry) and are
  /// stored in lexicographic order.
  SparseState(std::size_t modes, std::vector<unsigned> indices, std::vector<double> populations)
      : modes_(modes) {
    if (modes == 0 || modes > kMaxModes) throw InvalidArgument("invalid mode count");
    if (indices.size() != populations.size() * modes)
      throw InvalidArgument("index list does not match the population count");
    detail::check_populations(populations);
    std::vector<std::size_t> order(populations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) { return std::span<const unsigned>(indices).subspan(i * modes, modes); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      auto ka = key(a), kb = key(b);
      return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(), kb.end());
    });
    indices_.reserve(indices.size());
    pops_.reserve(populations.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      auto k = key(order[r]);
      if (r > 0 && std::equal(k.begin(), k.end(), key(order[r - 1]).begin()))
        throw InvalidArgument("duplicate multi-index in sparse state");
      indices_.insert(indices_.end(), k.begin(), k.end());
      pops_.push_back(populations[order[r]]);
    }
  }

  /// Thermal product keeping the most probable entries until at most
  /// joint_tail_epsilon of the mass is dropped; the kept part is renormalized.
  static SparseState thermal(std::span<const ModeSpec> modes, const TruncationPolicy& policy,
                             const SparsePolicy& sparse = {}) {
    validate_modes(modes);
    sparse.validate();
    Pruner pruner;
    for (const auto& m : modes) {
      auto p = thermal_populations(m, policy).populations;
      std::vector<double> logp(p.size());
      for (std::size_t n = 0; n < p.size(); ++n) logp[n] = std::log(p[n]);
      pruner.p.push_back(std::move(p));
      pruner.logp.push_back(std::move(logp));
    }
    pruner.prepare();

    double threshold = -std::numeric_limits<double>::infinity();
    const double full_mass = pruner.mass(threshold);
    if (sparse.joint_tail_epsilon > 0.0) {
      const double target = full_mass * (1.0 - sparse.joint_tail_epsilon);
      double lo = pruner.min_log, hi = pruner.best_rest[0];
      if (pruner.mass(hi) >= target) {
        lo = hi;
      } else {
        for (int it = 0; it < 100 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          (pruner.mass(mid) >= target ? lo : hi) = mid;
        }
      }
      threshold = lo;
    }
    const std::size_t count = pruner.count(threshold);
    if (count > sparse.max_entries) throw TruncationOverflow(count, sparse.max_entries);

    std::vector<unsigned> indices;
    std::vector<double> pops;
    indices.reserve(count * modes.size());
    pops.reserve(count);
    std::vector<unsigned> current(modes.size());
    pruner.enumerate(threshold, current, indices, pops);
    double kept = 0.0;
    for (double p : pops) kept += p;
    for (double& p : pops) p /= kept;
    SparseState out(modes.size(), std::move(indices), std::move(pops));
    // with no threshold the difference is only summation-order rounding
    if (sparse.joint_tail_epsilon > 0.0) out.dropped_mass_ = std::max(0.0, full_mass - kept);
    return out;
  }

  std::size_t mode_count() const noexcept { return modes_; }
  std::size_t entry_count() const noexcept { return pops_.size(); }
  std::span<const double> populations() const noexcept { return pops_; }
  std::span<const unsigned> indices() const noexcept { return indices_; }
  std::span<const unsigned> index(std::size_t entry) const {
    return std::span<const unsigned>(indices_).subspan(entry * modes_, modes_);
  }
  /// Thermal mass removed by joint pruning, before renormalization.
  double dropped_mass() const noexcept { return dropped_mass_; }

  double total_mass() const {
    return parallel::sum(pops_.size(), [&](std::size_t i) { return pops_[i]; });
  }

  double population(std::span<const unsigned> idx) const {
    if (idx.size() != modes_) throw InvalidArgument("index length does not match mode count");
    std::size_t lo = 0, hi = pops_.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      auto k = index(mid);
      if (std::lexicographical_compare(k.begin(), k.end(), idx.begin(), idx.end()))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo < pops_.size() && std::ranges::equal(index(lo), idx)) return pops_[lo];
    return 0.0;
  }

  double mean_occupation(std::size_t mode) const {
    detail::check_mode(mode, modes_);
    return parallel::sum(pops_.size(), [&](std::size_t i) {
      return pops_[i] * static_cast<double>(indices_[i * modes_ + mode]);
    });
  }

  std::vector<double> means() const {
    std::vector<double> out(modes_);
    for (std::size_t k = 0; k < modes_; ++k) out[k] = mean_occupation(k);
    return out;
  }

  double ground_fidelity(std::span<const std::size_t> subset) const {
    const auto chosen = detail::checked_subset(subset, modes_);
    return parallel::sum(pops_.size(), [&](std::size_t i) {
      for (auto k : chosen)
        if (indices_[i * modes_ + k] != 0) return 0.0;
      return pops_[i];
    });
  }

  double apply_ratios(std::span<const double> ratios) { return detail::multiply_and_renormalize(pops_, ratios); }

  RatioTable ratio_table(std::span<const ModeSpec> modes, KernelKind kind) const {
    if (modes.size() != modes_) throw InvalidArgument("mode list does not match the state");
    return prepare_ratio_table(indices_, modes, kind);
  }

 private:
  // Enumerates product states with log-probability >= threshold. Per-mode
  // log-probabilities are non-increasing in n, so each loop can stop early.
  struct Pruner {
    std::vector<std::vector<double>> p;
    std::vector<std::vector<double>> logp;
    std::vector<double> best_rest;  // best_rest[k] = sum_{j >= k} logp[j][0]
    std::vector<double> last_prefix;
    double min_log = 0.0;

    void prepare() {
      const std::size_t K = p.size();
      best_rest.assign(K + 1, 0.0);
      for (std::size_t k = K; k-- > 0;) best_rest[k] = best_rest[k + 1] + logp[k][0];
      min_log = 0.0;
      for (const auto& l : logp) min_log += l.back();
      last_prefix.assign(p.back().size() + 1, 0.0);
      for (std::size_t n = 0; n < p.back().size(); ++n) last_prefix[n + 1] = last_prefix[n] + p.back()[n];
    }

    // Entries of the last mode with partial + logp >= threshold.
    std::size_t last_count(double partial, double threshold) const {
      const auto& l = logp.back();
      std::size_t lo = 0, hi = l.size();
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (partial + l[mid] >= threshold)
          lo = mid + 1;
        else
          hi = mid;
      }
      return lo;
    }

    template <class Leaf>
    void walk(std::size_t k, double partial, double weight, double threshold, Leaf&& leaf) const {
      if (k + 1 == p.size()) {
        leaf(partial, weight, last_count(partial, threshold));
        return;
      }
      for (std::size_t n = 0; n < p[k].size(); ++n) {
        const double v = partial + logp[k][n];
        if (v + best_rest[k + 1] < threshold) break;
        walk(k + 1, v, weight * p[k][n], threshold, leaf);
      }
    }

    double mass(double threshold) const {
      double total = 0.0;
      walk(0, 0.0, 1.0, threshold, [&](double, double w, std::size_t c) { total += w * last_prefix[c]; });
      return total;
    }

    std::size_t count(double threshold) const {
      std::size_t total = 0;
      walk(0, 0.0, 1.0, threshold, [&](double, double, std::size_t c) { total += c; });
      return total;
    }

    void enumerate(double threshold, std::vector<unsigned>& current, std::vector<unsigned>& indices,
                   std::vector<double>& pops, std::size_t k = 0, double partial = 0.0,
                   double weight = 1.0) const {
      if (k + 1 == p.size()) {
        const std::size_t c = last_count(partial, threshold);
        for (std::size_t n = 0; n < c; ++n) {
          current[k] = static_cast<unsigned>(n);
          indices.insert(indices.end(), current.begin(), current.end());
          pops.push_back(weight * p[k][n]);
        }
        return;
      }
      for (std::size_t n = 0; n < p[k].size(); ++n) {
        const double v = partial + logp[k][n];
        if (v + best_rest[k + 1] < threshold) break;
        current[k] = static_cast<unsigned>(n);
        enumerate(threshold, current, indices, pops, k + 1, v, weight * p[k][n]);
      }
    }
  };

  std::size_t modes_ = 0;
  std::vector<unsigned> indices_;
  std::vector<double> pops_;
  double dropped_mass_ = 0.0;
};

/// Interface shared by the three storages.
template <class S>
concept DiagonalState = requires(S s, const S cs, std::span<const double> ratios,
                                 std::span<const std::size_t> subset, std::span<const ModeSpec> modes) {
  { cs.mode_count() } -> std::convertible_to<std::size_t>;
  { cs.entry_count() } -> std::convertible_to<std::size_t>;
  { cs.total_mass() } -> std::convertible_to<double>;
  { cs.mean_occupation(std::size_t{}) } -> std::convertible_to<double>;
  { cs.means() } -> std::convertible_to<std::vector<double>>;
  { cs.ground_fidelity(subset) } -> std::convertible_to<double>;
  { s.apply_ratios(ratios) } -> std::convertible_to<double>;
  { cs.ratio_table(modes, KernelKind::closed_form) } -> std::same_as<RatioTable>;
};

static_assert(DiagonalState<DenseState>);
static_assert(DiagonalState<ShellState>);
static_assert(DiagonalState<SparseState>);

using JointState = std::variant<DenseState, ShellState, SparseState>;

/// Storage choice: dense for K <= 2, shells for K >= 3 with the closed-form
/// kernel, sparse map for K >= 3 with the oracle kernel.
inline JointState make_joint_state(std::span<const ModeSpec> modes, const TruncationPolicy& policy,
                                   KernelKind kind, const SparsePolicy& sparse = {}) {
  validate_modes(modes);
  if (modes.size() <= 2) return joint_state_from_thermal(modes, policy);
  if (kind == KernelKind::closed_form) return ShellState::thermal(modes, policy);
  return SparseState::thermal(modes, policy, sparse);
}

}  // namespace mbcool
