#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cpsbm {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive well-separated substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of substream `stream` under master seed `seed`. Substreams are keyed,
// not sequential, so any execution order yields the same draws per key.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(substream_seed(seed, stream));
}

// Uniform on the open interval (0, 1); never returns 0 or 1.
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_open(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_open(rng);
}

inline double standard_exponential(Rng& rng) { return -std::log(uniform_open(rng)); }

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace cpsbm
