#pragma once

// Priors for both model families, and draws of new components for birth moves.
//
// The joint log-prior carries the Dirichlet normalising constant (K-1)! and the
// label-symmetry factor K! for each mixture block, so that the trans-dimensional
// acceptance ratio can be formed directly from log-posterior differences.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stopover/math.hpp"
#include "stopover/params.hpp"
#include "stopover/random.hpp"

namespace stopover {

/// Prior sd for logistic-regression coefficients with n covariates: variance pi^2 / (3(n+1)).
inline double logistic_coefficient_sd(int covariates) {
  return std::numbers::pi / std::sqrt(3.0 * (covariates + 1));
}

struct OpenPriors {
  int M_max = 20;
  int G_max = 15;
  double G_poisson_mean = 1.0;  // G - 1 ~ Poisson(mean)
  double N_mean = 55000.0;
  double N_sd = 10000.0;
  double mu_mean = 0.0;         // arrival means ~ Normal(mu_mean, mu_sd)
  double mu_sd = 1.0;
  double sigma_lower = 0.1;     // arrival sds ~ Uniform(sigma_lower, sigma_upper]
  double sigma_upper = 1.0;
  double retention_sd = logistic_coefficient_sd(2);
  double capture_sd = logistic_coefficient_sd(3);

  /// Defaults for a T-day study: mu ~ N(T/2, (T/2)^2), sigma ~ U(0.1, T].
  static OpenPriors for_days(int T) {
    OpenPriors p;
    p.mu_mean = T / 2.0;
    p.mu_sd = T / 2.0;
    p.sigma_upper = T;
    return p;
  }

  void validate() const {
    if (M_max < 1 || G_max < 1) throw std::invalid_argument("priors: component caps must be >= 1");
    if (!(G_poisson_mean > 0.0)) throw std::invalid_argument("priors: G_poisson_mean must be positive");
    if (!(N_sd > 0.0) || !(mu_sd > 0.0)) throw std::invalid_argument("priors: scales must be positive");
    if (!(sigma_lower > 0.0) || !(sigma_upper > sigma_lower))
      throw std::invalid_argument("priors: need 0 < sigma_lower < sigma_upper");
    for (double v : {N_mean, mu_mean, retention_sd, capture_sd})
      if (!std::isfinite(v)) throw std::invalid_argument("priors: non-finite hyperparameter");
  }
};

struct ClosedPriors {
  int G_max = 10;
  long N_min = 1;   // resolved to max(D, 1)
  long N_max = 10;  // support bound of the 1/N prior; default 10 * D

  void validate() const {
    if (G_max < 1) throw std::invalid_argument("priors: G_max must be >= 1");
    if (N_min < 1 || N_max < N_min) throw std::invalid_argument("priors: need 1 <= N_min <= N_max");
  }
};

// --- per-component densities (the birth proposal densities) -------------------

inline double arrival_component_logprior(double mu, double sigma, const OpenPriors& pr) {
  if (!(sigma > pr.sigma_lower && sigma <= pr.sigma_upper) || !std::isfinite(mu)) return kNegInf;
  return normal_logpdf(mu, pr.mu_mean, pr.mu_sd) - std::log(pr.sigma_upper - pr.sigma_lower);
}

inline double behaviour_component_logprior(double phi0, const OpenPriors& pr) {
  if (!std::isfinite(phi0)) return kNegInf;
  return normal_logpdf(phi0, 0.0, pr.retention_sd);
}

inline double capture_group_logprior(double p) { return p > 0.0 && p < 1.0 ? 0.0 : kNegInf; }

struct ArrivalComponent {
  double mu;
  double sigma;
};

inline ArrivalComponent sample_arrival_component(const OpenPriors& pr, Rng& rng) {
  const double mu = normal(rng, pr.mu_mean, pr.mu_sd);
  // 1 - u lies in (0, 1], so sigma lands in (lower, upper].
  const double sigma = pr.sigma_lower + (pr.sigma_upper - pr.sigma_lower) * (1.0 - uniform01(rng));
  return {mu, sigma};
}

inline double sample_behaviour_component(const OpenPriors& pr, Rng& rng) { return normal(rng, 0.0, pr.retention_sd); }

inline double sample_capture_group(Rng& rng) {
  double p;
  do p = uniform01(rng);
  while (p <= 0.0);
  return p;
}

// --- joint priors --------------------------------------------------------------

/// log K! + log (K-1)!: label symmetry times the Dirichlet(1,...,1) density.
inline double mixture_block_logprior(int K) { return log_factorial(K) + log_factorial(K - 1); }

inline double shifted_poisson_logpmf(int G, double mean) { return poisson_logpmf(G - 1, mean); }

inline double log_prior(const OpenParamState& s, const OpenPriors& pr) {
  const int M = s.M(), G = s.G();
  if (M < 1 || M > pr.M_max || G < 1 || G > pr.G_max) return kNegInf;
  for (double w : s.arrival.w)
    if (!(w >= 0.0)) return kNegInf;
  for (double p : s.behaviour.pi)
    if (!(p >= 0.0)) return kNegInf;
  const auto& det = s.detection;
  if (!(det.s > 0.0 && det.s < 1.0) || s.N < 0) return kNegInf;

  double lp = -std::log(static_cast<double>(pr.M_max)) + shifted_poisson_logpmf(G, pr.G_poisson_mean);
  lp += mixture_block_logprior(M) + mixture_block_logprior(G);
  for (int m = 0; m < M; ++m) {
    const auto i = static_cast<std::size_t>(m);
    lp += arrival_component_logprior(s.arrival.mu[i], s.arrival.sigma[i], pr);
  }
  for (double phi0 : s.behaviour.phi0) lp += behaviour_component_logprior(phi0, pr);
  lp += normal_logpdf(s.behaviour.gamma_t, 0.0, pr.retention_sd);
  lp += normal_logpdf(s.behaviour.gamma_a, 0.0, pr.retention_sd);
  for (double c : {det.cap0, det.cap_e, det.cap_loc2, det.cap_loc3}) lp += normal_logpdf(c, 0.0, pr.capture_sd);
  lp += normal_logpdf(static_cast<double>(s.N), pr.N_mean, pr.N_sd);
  return std::isnan(lp) ? kNegInf : lp;
}

inline double log_prior(const ClosedParamState& s, const ClosedPriors& pr) {
  const int G = s.G();
  if (G < 1 || G > pr.G_max || s.N < pr.N_min || s.N > pr.N_max) return kNegInf;
  for (double p : s.pi)
    if (!(p >= 0.0)) return kNegInf;
  double lp = -std::log(static_cast<double>(pr.G_max)) + mixture_block_logprior(G);
  for (double p : s.p) lp += capture_group_logprior(p);
  lp -= std::log(static_cast<double>(s.N));
  return lp;
}

}  // namespace stopover
