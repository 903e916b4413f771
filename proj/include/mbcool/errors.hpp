#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mbcool {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A mode needs more Fock states than the truncation policy allows.
class TruncationOverflow : public Error {
 public:
  TruncationOverflow(std::size_t required, std::size_t cap)
      : Error("truncation overflow: " + std::to_string(required) +
              " basis states required but hard_cap is " + std::to_string(cap)),
        required_(required),
        cap_(cap) {}

  std::size_t required() const noexcept { return required_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t required_;
  std::size_t cap_;
};

/// Closed-form kernel requested where only the block oracle is valid.
class KernelMismatch : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Every mode is already in its ground state, so no optimal interval exists.
class AlreadyCold : public Error {
 public:
  AlreadyCold() : Error("thermal Rabi frequency is zero: all modes are already cold") {}
};

/// Perturbative mean evaluated outside Omega_th * tau < 1.
class ExpansionDomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbcool
