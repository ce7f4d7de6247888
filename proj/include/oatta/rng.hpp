#pragma once

#include <cstdint>
#include <cmath>

namespace oatta {

/**
 * Deterministic random number generation.
 *
 * Reproducibility is part of the library contract: every sampled stream and
 * every synthetic prediction must be reconstructible from a 64-bit seed alone,
 * on any platform, from any language. We therefore pin the generator
 * *algorithms* here instead of relying on std::mt19937 / std::*_distribution,
 * whose outputs are implementation-defined.
 *
 * Pinned algorithms:
 *  - mix64:  the SplitMix64 finalizer (Steele, Lea, Flood 2014). Used to
 *    derive independent sub-stream seeds from a user seed plus a role tag.
 *  - Rng:    PCG-XSH-RR 64/32 (O'Neill 2014, "pcg32"). 64-bit LCG state
 *    (multiplier 6364136223846793005, odd per-stream increment), output is a
 *    xorshifted high-bits value rotated by the top 5 state bits.
 *  - next_double: two 32-bit outputs are packed into the top 53 bits of a
 *    64-bit word and scaled by 2^-53, giving a uniform double in [0, 1).
 *  - next_gaussian: Box-Muller on (u1, u2] with u1 in (0, 1]; the sine twin
 *    is cached and returned on the following call.
 *
 * Integer draws in [0, bound) use 32-bit rejection sampling (threshold
 * (2^32 - bound) % bound), so they are exactly uniform.
 */

// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives the seed for an independent sub-stream (e.g. labels vs. logits of
// the same run). Distinct tags give decorrelated generators.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (tag + 1));
}

class Rng {
 public:
  // Seeding follows the pcg32 reference: the increment is (initseq << 1) | 1.
  explicit Rng(std::uint64_t initstate, std::uint64_t initseq = 0xDA3E39CB94B95BDBULL)
      : state_(0), inc_((initseq << 1u) | 1u) {
    next_u32();
    state_ += initstate;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform double in [0, 1), 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound); exact via rejection. bound must be >= 1.
  std::uint32_t next_below(std::uint32_t bound) {
    const std::uint32_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal deviate, Box-Muller with a cached twin.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_double();  // (0, 1]: keeps the log finite
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace oatta
