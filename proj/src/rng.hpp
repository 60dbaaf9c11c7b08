#pragma once

#include <cstdint>

namespace bell {

/// Stateless counter-based generator: the value at (seed, stream, counter) is a
/// fixed hash, so any trial can be drawn independently of every other one.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(key_ + counter * 0x9E3779B97F4A7C15ULL) ^ key_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace bell
