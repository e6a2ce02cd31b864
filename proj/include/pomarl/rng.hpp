#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pomarl {

// Seeded random stream. All draws are derived from raw mt19937_64 output so
// that sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift; modulo bias is < 2^-64 * n.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

  // Standard normal via Box-Muller. Consumes two uniforms per call; no
  // cached second value, so the stream position is call-count determined.
  double gaussian() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Derive an independent child stream (used to split env/agent/gan streams).
  Rng split() { return Rng(eng_() ^ 0x9e3779b97f4a7c15ull); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace pomarl
