#pragma once

#include <cstdint>

namespace frwcap {

// Splittable counter-style generator built on the SplitMix64 mixer
// (Steele/Lea/Flood; mixer constants by Vigna). Each (seed, stream)
// pair yields an independent sequence, so per-walk streams are a pure
// function of the walk index and results do not depend on thread
// scheduling.
class SplitMix64 {
 public:
  SplitMix64() = default;
  explicit SplitMix64(uint64_t seed) : state_(mix(seed)) {}
  SplitMix64(uint64_t seed, uint64_t stream)
      : state_(mix(mix(seed) + (stream + 1) * kGamma)) {}

  uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in [0, n)
  uint64_t below(uint64_t n) { return next() % n; }

  static uint64_t mix(uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  uint64_t state_ = 0;
};

}  // namespace frwcap
