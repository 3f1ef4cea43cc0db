#pragma once

#include <cstdint>

// Seeded random streams for fault campaigns. Every trial owns an independent
// substream derived from (campaign seed, trial index), so results do not
// depend on scheduling and any trial can be replayed in isolation.
namespace gimli_sifa {

inline uint64_t splitmix64_mix(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct SplitMix64 {
  uint64_t state = 0;

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint32_t next_u32() { return static_cast<uint32_t>(next() >> 32); }

  // Uniform in [0, 1) with 53 significant bits; bit-stable across platforms.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) by rejection; n must be nonzero.
  uint64_t next_below(uint64_t n) {
    uint64_t limit = n * (~0ull / n);
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }
};

inline SplitMix64 trial_stream(uint64_t seed, uint64_t trial_index) {
  return SplitMix64{splitmix64_mix(seed) ^ splitmix64_mix(~trial_index * 0x9e3779b97f4a7c15ull + 1)};
}

}  // namespace gimli_sifa
