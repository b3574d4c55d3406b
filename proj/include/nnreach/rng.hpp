#pragma once

#include <cstdint>
#include <random>

namespace nnreach {

/// SplitMix64 finalizer. Used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Deterministic generator used everywhere in the library: a 64-bit Mersenne
/// twister whose uniform doubles are built from the top 53 bits, so results do
/// not depend on the standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Substream `index` of the stream rooted at `seed`. Substreams of
  /// different indices are statistically independent and depend only on
  /// (seed, index), never on generation order.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
  std::mt19937_64 engine_;
};

}  // namespace nnreach
