#pragma once

// Portable seeded random numbers.
//
// The standard <random> engines are portable but the distributions are not:
// libstdc++, libc++ and MSVC produce different normal/gamma streams from the
// same engine. Every variate used by the solvers is therefore derived here from
// raw 64-bit outputs with a fixed algorithm:
//
//   engine   xoshiro256** (Blackman & Vigna), state seeded by SplitMix64(seed)
//   uniform  top 53 bits * 2^-53, in [0, 1)
//   integer  Lemire's multiply-shift with rejection, unbiased in [0, bound)
//   normal   Marsaglia polar method (second variate cached)
//   gamma    Marsaglia-Tsang squeeze; shape < 1 via the U^(1/shape) boost
//
// Identical seeds give identical streams on every platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace cardsel {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
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

  /// Gamma(shape, 1). shape must be > 0.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u;
      do {
        u = uniform();
      } while (u == 0.0);
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Dirichlet(alpha) draw written into `out` (same length as alpha).
inline void sample_dirichlet(Rng& rng, std::span<const double> alpha, std::span<double> out) {
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = rng.gamma(alpha[i]);
    total += out[i];
  }
  if (total <= 0.0) {
    // All gammas underflowed (tiny alphas); fall back to a vertex.
    std::fill(out.begin(), out.end(), 0.0);
    out[rng.below(out.size())] = 1.0;
    return;
  }
  for (auto& x : out) x /= total;
}

/// Symmetric Dirichlet(1): uniform on the simplex.
inline void sample_flat_dirichlet(Rng& rng, std::span<double> out) {
  double total = 0.0;
  for (auto& x : out) {
    double u;
    do {
      u = rng.uniform();
    } while (u == 0.0);
    x = -std::log(u);
    total += x;
  }
  for (auto& x : out) x /= total;
}

/// Uniform k-subset of {0..n-1} via partial Fisher-Yates over `scratch`,
/// which must hold a permutation of the population. Returns the subset sorted.
inline std::vector<std::size_t> sample_subset(Rng& rng, std::vector<std::size_t>& scratch, std::size_t k) {
  const std::size_t n = scratch.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(scratch[i], scratch[j]);
  }
  std::vector<std::size_t> subset(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(subset.begin(), subset.end());
  return subset;
}

}  // namespace cardsel
