#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace frs {

// Deterministic counter-free PRNG built on splitmix64. Streams are derived by
// hashing a (seed, tag path) tuple, so any draw is reproducible in isolation:
// the k-th ensemble member's noise at iteration i never depends on how many
// values other consumers pulled. std::normal_distribution and friends are
// implementation-defined, so all sampling here is hand-rolled.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased for any n.
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v >= threshold) return v % n;
    }
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller; one value per call.
  double gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

 private:
  std::uint64_t state_;
};

namespace stream {
// Tags naming independent stream families. Values are arbitrary but frozen;
// changing them changes every derived draw.
inline constexpr std::uint64_t kParamInit = 0x01;
inline constexpr std::uint64_t kHeadReinit = 0x02;
inline constexpr std::uint64_t kShuffle = 0x03;
inline constexpr std::uint64_t kFinetuneNoise = 0x04;
inline constexpr std::uint64_t kEnsembleNoise = 0x05;
inline constexpr std::uint64_t kDataNoise = 0x06;
inline constexpr std::uint64_t kPoison = 0x07;
inline constexpr std::uint64_t kTrigger = 0x08;
inline constexpr std::uint64_t kFuzz = 0x09;
inline constexpr std::uint64_t kSample = 0x0a;
inline constexpr std::uint64_t kSynthData = 0x0b;
}  // namespace stream

// Mixes one tag into a running hash state.
inline std::uint64_t mix_tag(std::uint64_t h, std::uint64_t tag) {
  h ^= tag + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::uint64_t z = h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream from a seed and a tag path, e.g.
// derive_rng(seed, {stream::kEnsembleNoise, member, group}).
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix_tag(0x243f6a8885a308d3ULL, seed);
  for (std::uint64_t tag : path) h = mix_tag(h, tag);
  return Rng(h);
}

}  // namespace frs
