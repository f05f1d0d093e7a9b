#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace octcascade {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Used both as a
/// sequential generator and as a counter-based hash, so a value at
/// (seed, stream, counter) is reproducible without replaying a sequence.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Fixed stream ids. Each generator stage draws from its own stream so that
/// changing one stage's consumption leaves the others untouched.
enum class Stream : std::uint64_t {
  Surfaces = 1,
  Vessels = 2,
  Noise = 3,
};

constexpr std::uint64_t stream_key(std::uint64_t seed, Stream stream,
                                   std::uint64_t substream = 0) noexcept {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) ^
                    splitmix64(substream + 0x632BE59BD9B4E019ull));
}

/// Counter-based draws keyed by a stream key.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return splitmix64(key_ ^ splitmix64(counter));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on counters 2c and 2c+1.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t key_;
};

/// Sequential wrapper for small parameter draws.
class SequentialRng {
public:
  explicit SequentialRng(std::uint64_t key) noexcept : rng_(key) {}
  double uniform() noexcept { return rng_.uniform(next_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace octcascade
