#pragma once

// Naive reference implementations used to check the optimised likelihoods and
// the RJMCMC kernel on tiny instances. Nothing here calls into open_model.hpp or
// closed_model.hpp: every probability is recomputed from the parameter structs by
// direct enumeration over latent life histories (g, b, d), in probability space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "stopover/errors.hpp"
#include "stopover/params.hpp"
#include "stopover/priors.hpp"
#include "stopover/random.hpp"
#include "stopover/study_data.hpp"
#include "stopover/trace.hpp"

namespace stopover::oracle {

struct OracleBudget {
  int max_T = 8;
  long max_N = 10;
  int max_components = 10;
  long max_draws = 20'000'000;

  void check_T(int T) const {
    if (T > max_T) throw BudgetError("oracle budget: T=" + std::to_string(T) + " exceeds " + std::to_string(max_T));
  }
  void check_N(long N) const {
    if (N > max_N) throw BudgetError("oracle budget: N=" + std::to_string(N) + " exceeds " + std::to_string(max_N));
  }
  void check_components(int K) const {
    if (K > max_components)
      throw BudgetError("oracle budget: " + std::to_string(K) + " components exceed " + std::to_string(max_components));
  }
};

namespace naive {

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Arrival-day probabilities from the mixture CDF; T == 1 puts all mass on day 1.
inline std::vector<double> beta(const ArrivalMixture& arrival, int T) {
  std::vector<double> out(static_cast<std::size_t>(T), 0.0);
  if (T == 1) {
    out[0] = 1.0;
    return out;
  }
  for (std::size_t m = 0; m < arrival.w.size(); ++m) {
    const boost::math::normal_distribution<double> nd(arrival.mu[m], arrival.sigma[m]);
    auto mass = [&](double lo, double hi) {
      if (lo > arrival.mu[m])
        return boost::math::cdf(boost::math::complement(nd, lo)) - boost::math::cdf(boost::math::complement(nd, hi));
      return boost::math::cdf(nd, hi) - boost::math::cdf(nd, lo);
    };
    out[0] += arrival.w[m] * boost::math::cdf(nd, 1.0);
    for (int b = 2; b < T; ++b) out[static_cast<std::size_t>(b - 1)] += arrival.w[m] * mass(b - 1.0, b);
  }
  double head = 0.0;
  for (int b = 0; b < T - 1; ++b) head += out[static_cast<std::size_t>(b)];
  out.back() = std::max(0.0, 1.0 - head);
  return out;
}

/// P(g, b, d) for an animal of the super-population.
inline double life(const OpenParamState& s, const std::vector<double>& bt, int g, int b, int d, int T) {
  const auto& beh = s.behaviour;
  const auto gi = static_cast<std::size_t>(g);
  double pr = beh.pi[gi] * bt[static_cast<std::size_t>(b - 1)];
  for (int t = b; t <= d; ++t) {
    const int age = t - b + 1;
    const double phi = expit(beh.phi0[gi] + beh.gamma_t * t + beh.gamma_a * age);
    if (t < d) pr *= phi;
    else if (t < T) pr *= 1.0 - phi;
  }
  return pr;
}

inline double capture_p(const OpenParamState& s, const StudyDesign& design, int t) {
  const auto& det = s.detection;
  double eta = det.cap0 + det.cap_e * design.effort_on(t);
  if (design.location_on(t) == 2) eta += det.cap_loc2;
  if (design.location_on(t) == 3) eta += det.cap_loc3;
  return expit(eta);
}

/// P(x | present on days b..d), stepping through the days and tracking marked status.
inline double observe(const OpenParamState& s, const StudyDesign& design, std::string_view x, int b, int d) {
  double pr = 1.0;
  bool marked = false;
  for (int t = 1; t <= design.T(); ++t) {
    const char c = x[static_cast<std::size_t>(t - 1)];
    const bool present = t >= b && t <= d;
    if (!design.sampled(t)) continue;
    if (!present) {
      if (c != code::missed) return 0.0;
      continue;
    }
    if (design.capture(t)) {
      const double p = capture_p(s, design, t);
      if (c == code::captured) {
        pr *= p;
        marked = true;
      } else if (c == code::missed) {
        pr *= 1.0 - p;
      } else {
        return 0.0;
      }
    } else {
      if (!marked) {
        if (c != code::missed) return 0.0;
        continue;
      }
      const double sv = s.detection.s;
      if (c == code::resighted) pr *= sv;
      else if (c == code::missed) pr *= 1.0 - sv;
      else return 0.0;
    }
  }
  return pr;
}

}  // namespace naive

/// log P(x | theta) as the literal sum over g, b <= d of P(g,b,d) P(x | g,b,d).
inline double brute_history_loglik(const OpenParamState& state, const StudyDesign& design, std::string_view x,
                                   const OracleBudget& budget = {}) {
  const int T = design.T();
  budget.check_T(T);
  budget.check_components(std::max(state.M(), state.G()));
  if (static_cast<int>(x.size()) != T) throw DataError("brute_history_loglik: history length differs from T");
  const auto bt = naive::beta(state.arrival, T);
  double total = 0.0;
  for (int g = 0; g < state.G(); ++g)
    for (int b = 1; b <= T; ++b)
      for (int d = b; d <= T; ++d) total += naive::life(state, bt, g, b, d, T) * naive::observe(state, design, x, b, d);
  return std::log(total);
}

/// log P(never captured).
inline double brute_zero_loglik(const OpenParamState& state, const StudyDesign& design,
                                const OracleBudget& budget = {}) {
  std::string zero(static_cast<std::size_t>(design.T()), code::missed);
  for (int t = 1; t <= design.T(); ++t)
    if (!design.sampled(t)) zero[static_cast<std::size_t>(t - 1)] = code::missing;
  return brute_history_loglik(state, design, zero, budget);
}

/// P(present, unmarked and counted on resight day t).
inline double brute_zeta(const OpenParamState& state, const StudyDesign& design, int t,
                         const OracleBudget& budget = {}) {
  const int T = design.T();
  budget.check_T(T);
  const auto bt = naive::beta(state.arrival, T);
  double total = 0.0;
  for (int g = 0; g < state.G(); ++g)
    for (int b = 1; b <= t; ++b)
      for (int d = t; d <= T; ++d) {
        double unmarked = 1.0;
        for (int u = b; u < t; ++u)
          if (design.capture(u)) unmarked *= 1.0 - naive::capture_p(state, design, u);
        total += naive::life(state, bt, g, b, d, T) * unmarked * state.detection.s;
      }
  return total;
}

/// Full open-model log-likelihood, marked histories plus unmarked counts.
inline double brute_open_loglik(const OpenParamState& state, const StudyDesign& design, const ObservedData& data,
                                const OracleBudget& budget = {}) {
  budget.check_N(state.N);
  const long D = data.marked();
  if (state.N < D) return -std::numeric_limits<double>::infinity();
  double v = std::lgamma(state.N + 1.0) - std::lgamma(static_cast<double>(state.N - D) + 1.0);
  for (std::size_t h = 0; h < data.H(); ++h) {
    v -= std::lgamma(data.multiplicity[h] + 1.0);
    v += static_cast<double>(data.multiplicity[h]) * brute_history_loglik(state, design, data.histories[h], budget);
  }
  if (state.N > D) v += static_cast<double>(state.N - D) * brute_zero_loglik(state, design, budget);
  for (int t = 1; t <= design.T(); ++t) {
    if (!design.resight(t)) continue;
    const long y = *data.counts[static_cast<std::size_t>(t - 1)];
    const double z = brute_zeta(state, design, t, budget);
    const double n = static_cast<double>(state.N);
    v += std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
    v += y > 0 ? y * std::log(z) : 0.0;
    v += state.N - y > 0 ? (n - y) * std::log1p(-z) : 0.0;
  }
  return v;
}

/// log P(x) for the closed model: log sum_g pi_g prod_t p_g^x (1-p_g)^(1-x).
inline double brute_closed_history_loglik(const ClosedParamState& state, std::string_view x) {
  double total = 0.0;
  for (std::size_t g = 0; g < state.pi.size(); ++g) {
    double pr = state.pi[g];
    for (char c : x) pr *= c == code::captured ? state.p[g] : 1.0 - state.p[g];
    total += pr;
  }
  return std::log(total);
}

inline double brute_closed_loglik(const ClosedParamState& state, const ObservedData& data, int T) {
  const long D = data.marked();
  if (state.N < D) return -std::numeric_limits<double>::infinity();
  double v = std::lgamma(state.N + 1.0) - std::lgamma(static_cast<double>(state.N - D) + 1.0);
  for (std::size_t h = 0; h < data.H(); ++h)
    v += static_cast<double>(data.multiplicity[h]) * brute_closed_history_loglik(state, data.histories[h]) -
         std::lgamma(data.multiplicity[h] + 1.0);
  if (state.N > D)
    v += static_cast<double>(state.N - D) *
         brute_closed_history_loglik(state, std::string(static_cast<std::size_t>(T), code::missed));
  return v;
}

// --- rejection sampling -------------------------------------------------------------

template <class State>
struct RejectionResult {
  std::vector<State> draws;
  long proposed = 0;
  long accepted = 0;
  double log_L_max = 0.0;

  double acceptance_rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

/// Draws from the prior until `target` acceptances (or the draw budget) and keeps each
/// with probability exp(loglik - log_L_max). A kept draw whose likelihood exceeds the
/// bound aborts the run.
template <class State, class PriorDraw, class LogLik>
RejectionResult<State> rejection_sample(PriorDraw&& draw, LogLik&& loglik, double log_L_max, long target,
                                        long max_draws, Rng& rng) {
  RejectionResult<State> out;
  out.log_L_max = log_L_max;
  while (out.accepted < target) {
    if (out.proposed >= max_draws) break;
    State s = draw(rng);
    ++out.proposed;
    const double ll = loglik(s);
    if (ll > log_L_max) throw NumericError("rejection oracle: likelihood exceeds the grid bound");
    if (std::log(uniform01(rng)) < ll - log_L_max) {
      out.draws.push_back(std::move(s));
      ++out.accepted;
    }
  }
  if (out.accepted == 0 || out.acceptance_rate() < 1e-6)
    throw BudgetError("rejection oracle: acceptance rate below 1e-6 (instance too large)");
  return out;
}

/// One draw of (G, pi, p, N) from the closed-model prior.
inline ClosedParamState draw_closed_prior(const ClosedPriors& pr, Rng& rng) {
  ClosedParamState s;
  const int G = static_cast<int>(uniform_int(rng, 1, pr.G_max));
  std::vector<double> e(static_cast<std::size_t>(G));
  double sum = 0.0;
  for (auto& v : e) {
    v = -std::log(1.0 - uniform01(rng));
    sum += v;
  }
  for (auto& v : e) v /= sum;
  s.pi = e;
  s.p.resize(static_cast<std::size_t>(G));
  for (auto& p : s.p) p = sample_capture_group(rng);
  // 1/N on [N_min, N_max] by inversion of the cumulative weights.
  double total = 0.0;
  for (long n = pr.N_min; n <= pr.N_max; ++n) total += 1.0 / static_cast<double>(n);
  double u = uniform01(rng) * total;
  s.N = pr.N_max;
  for (long n = pr.N_min; n <= pr.N_max; ++n) {
    u -= 1.0 / static_cast<double>(n);
    if (u < 0.0) {
      s.N = n;
      break;
    }
  }
  return s;
}

/// Coarse grid bound on the closed likelihood over one- and two-group states, inflated x1.5.
inline double closed_log_L_max(const ObservedData& data, int T, const ClosedPriors& pr) {
  double best = -std::numeric_limits<double>::infinity();
  const int P = 60;
  for (long N = pr.N_min; N <= pr.N_max; ++N) {
    for (int i = 1; i < P; ++i) {
      ClosedParamState s{{1.0}, {static_cast<double>(i) / P}, N};
      best = std::max(best, brute_closed_loglik(s, data, T));
    }
    if (pr.G_max < 2) continue;
    const int Q = 20;
    for (int i = 1; i < Q; ++i)
      for (int j = i; j < Q; ++j)
        for (int k = 1; k < 10; ++k) {
          const double w = k / 10.0;
          ClosedParamState s{{w, 1.0 - w}, {static_cast<double>(i) / Q, static_cast<double>(j) / Q}, N};
          best = std::max(best, brute_closed_loglik(s, data, T));
        }
  }
  return best + std::log(1.5);
}

/// i.i.d. closed-model posterior draws by rejection from the prior.
inline RejectionResult<ClosedParamState> rejection_posterior(const ObservedData& data, int T, const ClosedPriors& pr,
                                                             long target, const OracleBudget& budget, Rng& rng) {
  budget.check_T(T);
  budget.check_N(pr.N_max);
  budget.check_components(pr.G_max);
  const double lmax = closed_log_L_max(data, T, pr);
  return rejection_sample<ClosedParamState>([&](Rng& r) { return draw_closed_prior(pr, r); },
                                            [&](const ClosedParamState& s) { return brute_closed_loglik(s, data, T); },
                                            lmax, target, budget.max_draws, rng);
}

/// Accepted draws in the sampler's trace layout (iteration = acceptance index).
inline ClosedTrace as_trace(const RejectionResult<ClosedParamState>& r, const ObservedData& data, int T,
                            const ClosedPriors& pr) {
  ClosedTrace trace;
  long i = 0;
  for (const auto& s : r.draws)
    trace.records.push_back({++i, s, brute_closed_loglik(s, data, T), log_prior(s, pr)});
  return trace;
}

// --- exact enumeration --------------------------------------------------------------

struct GridCell {
  std::vector<double> p;
  long N = 0;
  double probability = 0.0;
};

/// Normalised posterior over (p grid x N range) for a closed model with fixed
/// proportions pi; the p grid is uniform a priori, N has prior weight 1/N.
inline std::vector<GridCell> enumerate_discrete_posterior(const ObservedData& data, int T,
                                                          const std::vector<double>& pi,
                                                          const std::vector<std::vector<double>>& p_grid, long N_lo,
                                                          long N_hi, std::size_t max_cells = 10'000'000) {
  if (p_grid.empty() || N_hi < N_lo) throw std::invalid_argument("enumerate_discrete_posterior: empty grid");
  const auto cells = p_grid.size() * static_cast<std::size_t>(N_hi - N_lo + 1);
  if (cells > max_cells) throw BudgetError("enumerate_discrete_posterior: grid too large");
  std::vector<GridCell> out;
  out.reserve(cells);
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> logw;
  for (const auto& p : p_grid)
    for (long N = N_lo; N <= N_hi; ++N) {
      const ClosedParamState s{pi, p, N};
      const double lw = brute_closed_loglik(s, data, T) - std::log(static_cast<double>(N));
      logw.push_back(lw);
      top = std::max(top, lw);
      out.push_back({p, N, 0.0});
    }
  if (!std::isfinite(top)) throw NumericError("enumerate_discrete_posterior: zero posterior mass on the grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) sum += out[i].probability = std::exp(logw[i] - top);
  for (auto& c : out) c.probability /= sum;
  return out;
}

/// Marginal over N of an enumerated table, indexed from N_lo.
inline std::vector<double> n_marginal(const std::vector<GridCell>& table, long N_lo, long N_hi) {
  std::vector<double> m(static_cast<std::size_t>(N_hi - N_lo + 1), 0.0);
  for (const auto& c : table) m[static_cast<std::size_t>(c.N - N_lo)] += c.probability;
  return m;
}

}  // namespace stopover::oracle
