#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pgso {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a path of integer tags.
/// derive_seed(s, {a, b}) == derive_seed(derive_seed(s, {a}), {b}).
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) {
  for (std::uint64_t tag : path) seed = mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return seed;
}

inline Rng make_rng(std::uint64_t seed,
                    std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(seed, path));
}

/// Stream tags used to split an episode seed into independent streams.
enum class Stream : std::uint64_t {
  acquisition = 1,
  training = 2,
  gradient = 3,
  sigma = 4,
  oracle = 5,
  policy = 6,
  xdist = 7,
  members = 8,
  embedding = 9,
  evaluation = 10,
  rollout = 11,
  init = 12,
};

constexpr std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace pgso
