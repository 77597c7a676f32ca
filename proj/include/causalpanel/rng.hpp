#pragma once

#include <cstdint>
#include <random>

#include "causalpanel/mathstats.hpp"

namespace causalpanel {

// splitmix64 step; used to derive well-mixed child seeds from (seed, index)
// pairs so parallel streams are reproducible regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s = seed ^ (0x9e3779b97f4a7c15ULL + index);
  const std::uint64_t b = splitmix64(s);
  std::uint64_t mixed = a ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2));
  return splitmix64(mixed);
}

// Deterministic random stream: mt19937_64 engine with hand-rolled value
// conversions. The standard distribution adaptors are avoided because their
// algorithms are implementation-defined; these conversions pin the exact
// output sequence to the seed alone.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
    engine_.seed(seq);
  }

  static RandomStream for_index(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(derive_seed(seed, index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1), for inverse-CDF transforms.
  double next_uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  double next_normal() { return normal_quantile(next_uniform_open()); }

  // Unbiased bounded integer in [0, n) via Lemire's rejection scheme.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0ULL - n) % n;
      while (lo < threshold) {
        m = static_cast<__uint128_t>(engine_()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace causalpanel
