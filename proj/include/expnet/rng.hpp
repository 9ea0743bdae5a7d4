#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace expnet {

struct Seed {
  std::uint64_t value = 0;
};

// Counter-based generator: every draw is a pure function of a seed and a
// tuple of integer keys, so sampling order and thread count never affect
// results. Keys are folded through the SplitMix64 finalizer.
namespace rng {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform on [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1), never exactly zero.
constexpr double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Seed seed, std::initializer_list<std::uint64_t> keys) {
  return to_unit(hash(seed.value, keys));
}

/// Standard normal by Box-Muller on two keyed uniforms.
inline double standard_normal(Seed seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = to_open_unit(hash(seed.value, {stream, index, 0}));
  const double u2 = to_unit(hash(seed.value, {stream, index, 1}));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Derives a child seed, e.g. (master, n, replication) -> network seed.
inline Seed derive(Seed parent, std::initializer_list<std::uint64_t> keys) {
  return {hash(parent.value, keys)};
}

// Stream tags.
inline constexpr std::uint64_t kAlphaStream = 1;
inline constexpr std::uint64_t kBetaStream = 2;
inline constexpr std::uint64_t kDyadStream = 3;
inline constexpr std::uint64_t kPerturbAlpha = 4;
inline constexpr std::uint64_t kPerturbBeta = 5;
inline constexpr std::uint64_t kParamSeed = 6;
inline constexpr std::uint64_t kNetworkSeed = 7;
inline constexpr std::uint64_t kInitSeed = 8;

}  // namespace rng
}  // namespace expnet
