#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sase/common.hpp"

namespace sase {

/// SplitMix64 finalizer, used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Purpose tags keep the channel draw and the noise draw of one trial on
/// disjoint streams, so changing the noise level never perturbs the channel.
enum class StreamPurpose : std::uint64_t { channel = 1, noise = 2, misc = 3 };

/// Counter-based derivation: the seed of stream (seed, trial, purpose) depends
/// on nothing else, so any subset of trials can be replayed in any order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial,
                                    StreamPurpose purpose) {
  return mix64(mix64(mix64(seed) ^ trial) ^ static_cast<std::uint64_t>(purpose));
}

/// Seeded random stream. Uniform and Gaussian variates are produced from the
/// raw 64-bit engine output by hand so the sequence is identical on every
/// standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose)
      : engine_(derive_seed(seed, trial, purpose)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// CN(0, variance): (x + j y) * sqrt(variance / 2), x and y standard normal.
  Complex complex_normal(double variance = 1.0) {
    const double scale = std::sqrt(variance / 2.0);
    const double x = normal();
    const double y = normal();
    return {x * scale, y * scale};
  }

  CVector complex_normal_vector(Index n, double variance = 1.0) {
    CVector out(n);
    for (Index i = 0; i < n; ++i) out(i) = complex_normal(variance);
    return out;
  }

  CMatrix complex_normal_matrix(Index rows, Index cols, double variance = 1.0) {
    CMatrix out(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) out(r, c) = complex_normal(variance);
    return out;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sase
