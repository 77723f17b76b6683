#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace pcsamp {

// Deterministic random utilities. std::mt19937_64 output is fully specified
// by the standard; the distribution transforms below are written out by hand
// because the std::*_distribution classes are implementation-defined and
// would break byte-reproducibility across standard libraries.

/// splitmix64 finalizer; good avalanche, used for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent seed for a sub-stream (bin index, shape index, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

// Reserved stream ids; per-bin streams use the bin index directly and bin
// counts stay far below these.
inline constexpr std::uint64_t kStreamWeights = 0x57;
inline constexpr std::uint64_t kStreamVoxel = 0x76;
inline constexpr std::uint64_t kStreamFpsStart = 0x66;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); unbiased via rejection.
  Eigen::Index uniform_index(Eigen::Index n) {
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<Eigen::Index>(r % un);
  }

  /// Standard normal via Box-Muller, one cached value.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// First M slots of a Fisher-Yates shuffle of 0..n-1: a uniform draw of M
/// distinct indices without replacement, in draw order.
inline Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> draw_without_replacement(
    Eigen::Index n, Eigen::Index m, Rng& rng) {
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = i + rng.uniform_index(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    out[i] = pool[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace pcsamp
