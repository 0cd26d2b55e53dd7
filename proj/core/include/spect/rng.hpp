#pragma once

#include <cstdint>

namespace spect {

/// splitmix64 finaliser; used for child-seed derivation.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for task `index` of a parallel job rooted at `parent`.
std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// PCG32 (XSH-RR, 64-bit state, 32-bit output).
///
/// Seeding follows the reference `pcg32_srandom_r`: state = 0,
/// inc = (stream << 1) | 1, step, state += seed, step. Only fixed-width
/// integer arithmetic is involved so streams match on every platform.
class Rng {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL >> 1;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = kDefaultStream) noexcept;

  std::uint32_t next_u32() noexcept;
  /// Uniform real in [0, 1) with 53 random bits.
  double next_unit() noexcept;
  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [0, bound) without modulo bias; bound > 0.
  std::uint32_t bounded(std::uint32_t bound) noexcept;
  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  /// Standard normal via Box-Muller (no cached second value).
  double normal() noexcept;

  std::uint64_t state() const noexcept { return state_; }
  std::uint64_t inc() const noexcept { return inc_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

}  // namespace spect
