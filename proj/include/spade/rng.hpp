#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Deterministic random primitives. The standard distributions are
// implementation-defined, so every draw that influences results goes through
// the explicit mappings below; outputs are identical across compilers.

namespace spade::rng {

/// splitmix64 step; used to derive independent stream seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a fresh seed for a named sub-stream (stage-two training, dropout, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_tag) {
  std::uint64_t s = base ^ (0x517cc1b727220a95ULL * (stream_tag + 1));
  return splitmix64(s);
}

/// Uniform double in [0, 1) from the top 53 bits of the generator.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Uniform integer in [0, bound). Modulo mapping: the negligible bias does not
/// matter here, portability of the draw sequence does.
inline std::size_t uniform_index(std::mt19937_64& gen, std::size_t bound) {
  return static_cast<std::size_t>(gen() % bound);
}

/// Fisher-Yates shuffle with portable draws.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(gen, i);
    std::swap(items[i - 1], items[j]);
  }
}

} // namespace spade::rng
