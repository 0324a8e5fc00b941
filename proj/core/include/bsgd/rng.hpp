#pragma once

#include <cstdint>
#include <string_view>

#include "bsgd/common.hpp"

namespace bsgd {

/// SplitMix64 finalizer. Used for seed derivation only, never for sampling.
std::uint64_t splitmix64(std::uint64_t x);

/// Stable 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Per-run seed from a root seed, a textual description of the sweep
/// coordinates and the seed index. Stable across platforms and releases:
///   splitmix64(splitmix64(root ^ fnv1a64(coords)) + index)
std::uint64_t derive_seed(std::uint64_t root, std::string_view coords, std::uint64_t index);

/// Independent generator streams for one run.
///
/// Outer samples (xi), inner conditional samples (eta) and auxiliary draws
/// (output selection, initialization) come from separate engines, so changing
/// the inner batch size never perturbs the sequence of outer samples.
struct RngStreams {
  Engine outer;
  Engine inner;
  Engine aux;

  explicit RngStreams(std::uint64_t seed);
};

inline double draw_normal(Engine& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  std::normal_distribution<double> dist(mean, stddev);
  return dist(rng);
}

inline double draw_uniform(Engine& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

inline bool draw_bernoulli(Engine& rng, double p) {
  std::bernoulli_distribution dist(p);
  return dist(rng);
}

}  // namespace bsgd
