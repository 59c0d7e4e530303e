#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace xcorr {

// Counter-based generator. Every draw is a pure function of
// (seed, stream, position), so any (grid point, trial) cell of a larger
// experiment can be reproduced in isolation and results never depend on
// thread scheduling. The core step is splitmix64; streams are decorrelated
// by hashing the stream id into the starting counter.
//
// The distribution transforms are spelled out here instead of using
// <random>, because the standard distributions are not bit-identical
// across library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(mix(seed) + stream)), seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform on (0, 1), both endpoints excluded; safe under log().
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal, Box-Muller. Consumes exactly two uniforms per pair.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream-id offsets keeping the draws of distinct pipeline stages disjoint
// even when they share one user-facing seed.
namespace stream_phase {
inline constexpr std::uint64_t sample = 0;
inline constexpr std::uint64_t calibration = 1ull << 56;
inline constexpr std::uint64_t sweep = 2ull << 56;
inline constexpr std::uint64_t bootstrap = 3ull << 56;
}  // namespace stream_phase

}  // namespace xcorr
