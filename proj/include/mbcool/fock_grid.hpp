#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mbcool/errors.hpp"

namespace mbcool {

/// Row-major product Fock basis; the last mode varies fastest.
class FockGrid {
 public:
  FockGrid() = default;

  explicit FockGrid(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw InvalidArgument("Fock grid needs at least one mode");
    strides_.assign(dims_.size(), 1);
    size_ = 1;
    for (std::size_t k = dims_.size(); k-- > 0;) {
      if (dims_[k] == 0) throw InvalidArgument("Fock grid dimensions must be >= 1");
      strides_[k] = size_;
      size_ *= dims_[k];
    }
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t modes() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(std::size_t mode) const { return strides_.at(mode); }

  /// Fock number of `mode` at flat position `flat`.
  std::size_t component(std::size_t flat, std::size_t mode) const noexcept {
    return (flat / strides_[mode]) % dims_[mode];
  }

  void unflatten(std::size_t flat, std::span<unsigned> index) const noexcept {
    for (std::size_t k = 0; k < dims_.size(); ++k)
      index[k] = static_cast<unsigned>(component(flat, k));
  }

  bool contains(std::span<const unsigned> index) const noexcept {
    if (index.size() != dims_.size()) return false;
    for (std::size_t k = 0; k < dims_.size(); ++k)
      if (index[k] >= dims_[k]) return false;
    return true;
  }

  std::size_t flatten(std::span<const unsigned> index) const {
    if (!contains(index)) throw InvalidArgument("multi-index outside the Fock grid");
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) flat += index[k] * strides_[k];
    return flat;
  }

  friend bool operator==(const FockGrid& a, const FockGrid& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

}  // namespace mbcool
