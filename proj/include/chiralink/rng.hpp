// chiralink: deterministic random streams (splitmix64) for shot sampling and
// policy-gradient exploration. Identical results independent of thread count
// or platform: no std:: distributions, all sampling is explicit arithmetic.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace chiralink {

struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (uses two uniforms per pair, caches one).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform(), u2 = uniform();
    // Guard the log: uniform() can return exactly 0.
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Stateless mix of independent stream labels into one 64-bit seed, so
// (seed, epoch, trial) streams are decorrelated and order-independent.
inline uint64_t mix_seed(uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  SplitMix64 s(a);
  uint64_t x = s.next();
  s.state = x ^ (b + 0x9e3779b97f4a7c15ULL);
  x = s.next();
  s.state = x ^ (c + 0xbf58476d1ce4e5b9ULL);
  return s.next();
}

// Draws `n` counts from the categorical distribution `probs` (need not be
// perfectly normalized; negative dust is clamped) by inverse-CDF sampling.
// Deterministic given rng state; O(n * log k) with a binary search per draw.
inline std::vector<long> multinomial_counts(const std::vector<double>& probs, long n,
                                            SplitMix64& rng) {
  const size_t k = probs.size();
  std::vector<double> cdf(k, 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) {
    acc += probs[i] > 0.0 ? probs[i] : 0.0;
    cdf[i] = acc;
  }
  std::vector<long> counts(k, 0);
  if (acc <= 0.0 || k == 0) return counts;
  for (long s = 0; s < n; ++s) {
    const double u = rng.uniform() * acc;
    // First index with cdf[i] > u.
    size_t lo = 0, hi = k - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (cdf[mid] > u)
        hi = mid;
      else
        lo = mid + 1;
    }
    ++counts[lo];
  }
  return counts;
}

}  // namespace chiralink
