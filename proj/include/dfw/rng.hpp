#pragma once

#include <cstdint>
#include <random>

namespace dfw {

// Named sub-streams so that topology draws never perturb data draws.
enum class Stream : std::uint64_t {
  Topology = 0x746f706fULL,
  Data = 0x64617461ULL,
  Trial = 0x7472696cULL,
  Probe = 0x70726f62ULL,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent 64-bit seed from a base seed, a stream tag and an index.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(stream)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace dfw
