#pragma once

#include <cstdint>

namespace ucbqrl {

/// Counter-based pseudo-random generator.
///
/// Draw i is a pure hash of (seed, stream, i): no hidden global state,
/// independent streams never collide, and replay with the same seed is
/// bit-exact. The mixer is the SplitMix64 finalizer.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(finalize(seed + 0x632BE59BD9B4E019ULL * (stream + 1))) {}

  std::uint64_t next_u64() { return finalize(key_ + kGamma * ++counter_); }

  /// Uniform on [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; the left-continuous quantile rejects u = 0.
  double next_unit_open_closed() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Deterministic per-stream seed, e.g. one sub-seed per episode index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  return rng.next_u64();
}

}  // namespace ucbqrl
