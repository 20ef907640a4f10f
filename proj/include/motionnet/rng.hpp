#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace motionnet {

/// Deterministic random source. std::mt19937_64 output is fully specified by
/// the standard; the distributions below are implemented by hand because the
/// std:: distribution objects are implementation-defined and would break
/// bit-reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of entropy.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  int64_t uniform_int(int64_t n) {
    // Modulo bias is negligible for n << 2^64 and keeps the draw sequence
    // simple and portable.
    return static_cast<int64_t>(engine_() % static_cast<uint64_t>(n));
  }

  /// Standard normal via Box-Muller. Consumes two draws per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard the log: uniform() can return exactly 0.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// splitmix64 finalizer; used to derive independent stream seeds from
/// (base seed, index) pairs so that e.g. the batch drawn at step t depends
/// only on (seed, t) and not on how many draws earlier steps consumed.
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace motionnet
