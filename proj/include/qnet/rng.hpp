#pragma once

#include <cstdint>

namespace qnet {

/// Counter-based generator: the n-th draw is a pure function of (seed, n),
/// so a run is reproduced exactly from its seed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) noexcept {
    // splitmix64 finalizer over the keyed counter
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() noexcept { return mix(seed_, counter_++); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Independent stream for a numbered sub-task.
  CounterRng derive(std::uint64_t index) const noexcept {
    return CounterRng(mix(seed_ ^ 0xD1B54A32D192ED03ULL, index));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace qnet
