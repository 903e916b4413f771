#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "mbcool/errors.hpp"

namespace mbcool {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  if (res.ec != std::errc()) throw NumericError("could not format floating-point value");
  return std::string(buf, res.ptr);
}

}  // namespace mbcool
