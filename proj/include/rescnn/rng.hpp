#pragma once

#include <cstdint>
#include <random>

namespace rescnn {

/// Seeded random source. Built on mt19937_64, whose output sequence is fixed by
/// the C++ standard; the conversions below avoid the implementation-defined
/// std distributions so a seed yields the same samples on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection sampled (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream; lets a component own its randomness without
  /// disturbing the parent's sequence beyond one draw.
  Rng fork() { return Rng(next_u64() ^ 0x9E3779B97F4A7C15ULL); }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

template <typename Container>
void shuffle(Container& c, Rng& rng) {
  for (std::size_t i = c.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(c[i - 1], c[j]);
  }
}

}  // namespace rescnn
