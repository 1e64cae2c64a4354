#pragma once

// Reproducible random streams.
//
// Every replicate draws from its own std::mt19937_64 whose seed is a
// SplitMix64 hash of (master_seed, replicate_index), so results depend only
// on that pair and never on thread count or scheduling. Conversions to
// doubles and bounded integers are done here rather than through the
// <random> distributions, whose outputs are implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>

namespace immunechain {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t replicate_index) noexcept {
  return splitmix64(master_seed ^ splitmix64(replicate_index + 0x632BE59BD9B4E019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master_seed, std::uint64_t replicate_index)
      : engine_(stream_seed(master_seed, replicate_index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53 bits.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// rate must be positive (unchecked on the hot path).
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  bool bernoulli(double prob) { return uniform() < prob; }

  /// Unbiased integer in [0, n) (Lemire's multiply-and-reject).
  std::uint64_t index(std::uint64_t n) {
    auto product = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        product = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace immunechain
