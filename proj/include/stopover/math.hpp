#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace stopover {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(inv_logit(x))
inline double log_inv_logit(double x) { return -softplus(-x); }

/// log(1 - inv_logit(x))
inline double log1m_inv_logit(double x) { return -softplus(x); }

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Standard normal CDF via erfc; accurate in both tails.
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Standard normal upper tail 1 - Phi(z).
inline double std_normal_ccdf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// P(lo < X <= hi) for X ~ N(mu, sigma^2), evaluated on whichever tail keeps precision.
inline double normal_interval_mass(double lo, double hi, double mu, double sigma) {
  const double zl = (lo - mu) / sigma;
  const double zh = (hi - mu) / sigma;
  if (zl > 0.0) return std::max(0.0, std_normal_ccdf(zl) - std_normal_ccdf(zh));
  return std::max(0.0, std_normal_cdf(zh) - std_normal_cdf(zl));
}

inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double log_factorial(long n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// log C(n, k); -inf outside 0 <= k <= n.
inline double log_choose(long n, long k) {
  if (k < 0 || k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double binomial_logpmf(long y, long n, double prob) {
  if (y < 0 || y > n) return kNegInf;
  if (prob <= 0.0) return y == 0 ? 0.0 : kNegInf;
  if (prob >= 1.0) return y == n ? 0.0 : kNegInf;
  return log_choose(n, y) + static_cast<double>(y) * std::log(prob) +
         static_cast<double>(n - y) * std::log1p(-prob);
}

/// Poisson log pmf at k for mean lambda > 0.
inline double poisson_logpmf(long k, double lambda) {
  if (k < 0) return kNegInf;
  return static_cast<double>(k) * std::log(lambda) - lambda - log_factorial(k);
}

}  // namespace stopover
