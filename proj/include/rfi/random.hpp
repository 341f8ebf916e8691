#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// Every draw is a pure function of (key, counter), so a stream for
// (seed, particle, step) can be materialized anywhere without shared state.
// This is what makes ensemble runs independent of how particles are split
// across workers.

#include <array>
#include <cstdint>

namespace rfi {

class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  static constexpr Counter apply(Counter ctr, Key key) {
    for (int r = 0; r < kRounds; ++r) {
      ctr = round(ctr, key);
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Uniform doubles keyed by (seed, stream, position).
///
/// `stream` identifies a particle (or any independent consumer) and
/// `position` a step. Each call to uniform() consumes one 64-bit half of a
/// Philox block; `lane` distinguishes multiple draws at the same position.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : key_{lo(seed), hi(seed)} {}

  std::array<std::uint64_t, 2> block(std::uint64_t stream, std::uint64_t position) const {
    const auto out = Philox4x32::apply({lo(position), hi(position), lo(stream), hi(stream)}, key_);
    return {join(out[0], out[1]), join(out[2], out[3])};
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t position, unsigned lane = 0) const {
    const auto b = block(stream, position + (lane >> 1) * kLaneStride);
    return to_unit(b[lane & 1u]);
  }

  static double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

private:
  // Positions used by extra lanes live far away from step indices.
  static constexpr std::uint64_t kLaneStride = std::uint64_t{1} << 48;

  static constexpr std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
  static constexpr std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }
  static constexpr std::uint64_t join(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(b) << 32) | a;
  }

  Philox4x32::Key key_;
};

/// SplitMix64 finalizer; used to derive child seeds (reference runs, replicates).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace rfi
