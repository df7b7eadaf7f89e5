#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gyronet/common.hpp"

namespace gyro {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is fixed by the standard); all draws below are built from raw
// engine words rather than std::*_distribution, whose algorithms are
// implementation-defined. Same seed, same sequence, on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n) by rejection.
  uint64_t below(uint64_t n);

  // Inclusive integer range.
  int range_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller on uniform01 draws.
  double normal();

  Vec uniform_vec(int n, double lo, double hi);

  // Uniform w.r.t. Lebesgue measure on the Euclidean ball of given radius.
  Vec ball_uniform(int dim, double radius);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent seed from (base, salt); splitmix64 finalizer.
  static uint64_t mix(uint64_t base, uint64_t salt);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gyro
