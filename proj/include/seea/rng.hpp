#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace seea {

// splitmix64; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  s = splitmix64(s ^ splitmix64(a));
  s = splitmix64(s ^ splitmix64(b ^ 0x14057b7ef767814fULL));
  s = splitmix64(s ^ splitmix64(c ^ 0x9e3779b97f4a7c15ULL));
  return s;
}

using Rng = std::mt19937_64;

// Uniform double in [0,1). Hand-rolled so sampling is engine-defined only,
// not distribution-implementation-defined.
inline double uniform01(Rng& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline double uniform_range(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Inverse-CDF draw from unnormalized nonnegative weights.
inline std::size_t weighted_index(Rng& rng, const std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return w.size() - 1;
}

}  // namespace seea
