#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace arplace {

/// The single seeded generator used everywhere: 64-bit Mersenne Twister
/// (std::mt19937_64, whose output sequence is fixed by the standard).
/// Floating-point draws take the top 53 bits of one output word, so results
/// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Stable per-key seed: FNV-1a over the key bytes, mixed with the base seed
/// through splitmix64. Independent of process, platform and key order.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view key);

}  // namespace arplace
