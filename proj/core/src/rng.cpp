#include "bsgd/rng.hpp"

namespace bsgd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view coords, std::uint64_t index) {
  return splitmix64(splitmix64(root ^ fnv1a64(coords)) + index);
}

RngStreams::RngStreams(std::uint64_t seed)
    : outer(splitmix64(seed ^ 0x6F75746572ULL)),   // "outer"
      inner(splitmix64(seed ^ 0x696E6E6572ULL)),   // "inner"
      aux(splitmix64(seed ^ 0x617578ULL)) {}       // "aux"

}  // namespace bsgd
