#pragma once

// Distributions come from Boost.Random rather than <random>: the standard
// library leaves the sampling algorithms unspecified, so traces would not be
// reproducible across toolchains.

#include <cstdint>
#include <random>
#include <span>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace stopover {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent per-chain / per-draw seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer on the closed range [lo, hi].
inline long uniform_int(Rng& rng, long lo, long hi) {
  return boost::random::uniform_int_distribution<long>(lo, hi)(rng);
}

inline double normal(Rng& rng, double mean, double sd) {
  return boost::random::normal_distribution<double>(mean, sd)(rng);
}

inline long poisson(Rng& rng, double mean) {
  return boost::random::poisson_distribution<long, double>(mean)(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Index drawn with probability proportional to weights (weights need not sum to 1).
inline std::size_t categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u marginally above the last weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return 0;
}

}  // namespace stopover
