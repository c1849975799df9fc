#pragma once

#include <cstdint>

namespace mesres {

// SplitMix64 finalizer: a deterministic, platform-independent 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Well-spread value for a (seed, stream) pair; streams never collide with
// plain seeds because the stream index is mixed before combining.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

// Uniform double in [0, 1) from the top 53 bits of an engine draw. Unlike
// std::uniform_real_distribution this is bit-stable across implementations.
template <class Engine>
double u01(Engine& engine) {
  return double(engine() >> 11) * 0x1.0p-53;
}

}  // namespace mesres
