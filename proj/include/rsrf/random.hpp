#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsrf {

/// Seeded random stream with hierarchical substream derivation.
///
/// Substreams are derived by value from a 128-bit state, so the derivation
/// tree is independent of generation order: deriving the same key chain from
/// the same master seed always yields the same stream. All draws are produced
/// from raw 64-bit output words (no std::*_distribution), which keeps results
/// bit-identical across compilers and platforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : s0_(mix(seed + kPhi)), s1_(mix(seed ^ kGamma)) {}

  /// Child stream keyed by `key`. Distinct keys give decorrelated streams;
  /// chains of derive() calls act as an (effectively) injective path encoding
  /// into the 128-bit state.
  [[nodiscard]] RandomStream derive(std::uint64_t key) const {
    RandomStream child = *this;
    child.s0_ = mix(s0_ + kPhi * (2 * key + 1));
    child.s1_ = mix(s1_ ^ (kGamma * (key + 1)));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(s0_ + counter_ * kPhi) ^ mix(s1_ + counter_ * kGamma);
  }

  /// Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in {0, ..., n-1}. n must be positive.
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform_below(n));
  }

  /// Standard normal via Box-Muller on the stream's own uniforms.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kGamma = 0xD1B54A32D192ED03ull;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t s0_;
  std::uint64_t s1_;
  std::uint64_t counter_ = 0;
};

// Fixed derivation tags so independent subsystems never share a substream.
namespace stream_tag {
inline constexpr std::uint64_t kTree = 1;
inline constexpr std::uint64_t kNode = 2;
inline constexpr std::uint64_t kDraw = 3;
inline constexpr std::uint64_t kTie = 4;
inline constexpr std::uint64_t kData = 5;
inline constexpr std::uint64_t kNoise = 6;
inline constexpr std::uint64_t kTest = 7;
inline constexpr std::uint64_t kProbe = 8;
}  // namespace stream_tag

}  // namespace rsrf
