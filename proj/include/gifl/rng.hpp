#pragma once

#include <cmath>
#include <cstdint>

namespace gifl {

// Deterministic, platform-independent generator (splitmix64 core). The std
// distributions are implementation-defined, so everything that feeds frozen
// test values or manifest bytes goes through this instead.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derive an independent stream, e.g. per dataset record or per worker.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 0x632be59bd9b4e019ULL)));
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection; unbiased and portable.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool next_bool() { return (next_u64() >> 63) != 0; }

  // Standard normal via Box-Muller.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Normal(0, sigma) truncated to [-2 sigma, 2 sigma] by rejection.
  double next_trunc_normal(double sigma) {
    for (;;) {
      double x = next_normal();
      if (x >= -2.0 && x <= 2.0) return x * sigma;
    }
  }

private:
  std::uint64_t state_;
};

}  // namespace gifl
