#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <string>

namespace spade {

/// Shortest round-trip decimal form of a double. Deterministic, so emitted
/// CSV/JSON bytes are stable across runs.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

/// Fixed-precision form for human-readable tables.
inline std::string format_fixed(double x, int digits) {
  std::array<char, 64> buf{};
  int n = std::snprintf(buf.data(), buf.size(), "%.*f", digits, x);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

} // namespace spade
