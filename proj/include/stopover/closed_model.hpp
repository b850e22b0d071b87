#pragma once

// Closed population with G groups of time-constant capture probability.

#include <cmath>
#include <string_view>
#include <vector>

#include "stopover/math.hpp"
#include "stopover/params.hpp"
#include "stopover/study_data.hpp"

namespace stopover {

/// log sum_g pi_g prod_t p_g^{x_t} (1 - p_g)^{1 - x_t}, for a binary history.
inline double closed_history_loglik(const ClosedParamState& state, std::string_view x) {
  long caught = 0;
  for (char c : x) caught += c == code::captured ? 1 : 0;
  const long missed = static_cast<long>(x.size()) - caught;
  double acc = kNegInf;
  for (int g = 0; g < state.G(); ++g) {
    const auto i = static_cast<std::size_t>(g);
    if (state.pi[i] <= 0.0) continue;
    const double p = state.p[i];
    double lp = std::log(state.pi[i]);
    if (caught > 0) lp += static_cast<double>(caught) * std::log(p);
    if (missed > 0) lp += static_cast<double>(missed) * std::log1p(-p);
    acc = log_add_exp(acc, lp);
  }
  return acc;
}

/// Closed-model likelihood with the histories reduced to capture totals.
class ClosedLikelihood {
 public:
  explicit ClosedLikelihood(const ObservedData& data) {
    for (std::size_t h = 0; h < data.H(); ++h) {
      const auto& x = data.histories[h];
      if (T_ == 0) T_ = static_cast<long>(x.size());
      long caught = 0;
      for (char c : x) caught += c == code::captured ? 1 : 0;
      tallies_.push_back({caught, data.multiplicity[h]});
      D_ += data.multiplicity[h];
      log_multiplicity_ += log_factorial(data.multiplicity[h]);
    }
  }

  ClosedLikelihood(const ObservedData& data, int T) : ClosedLikelihood(data) { T_ = T; }

  long marked_count() const { return D_; }
  long occasions() const { return T_; }

  double operator()(const ClosedParamState& s) const {
    if (s.N < D_) return kNegInf;
    double v = log_factorial(s.N) - log_factorial(s.N - D_) - log_multiplicity_;
    for (const auto& [caught, n] : tallies_) v += static_cast<double>(n) * mixture(s, caught);
    if (s.N > D_) v += static_cast<double>(s.N - D_) * mixture(s, 0);
    return std::isnan(v) ? kNegInf : v;
  }

 private:
  double mixture(const ClosedParamState& s, long caught) const {
    const long missed = T_ - caught;
    double acc = kNegInf;
    for (int g = 0; g < s.G(); ++g) {
      const auto i = static_cast<std::size_t>(g);
      if (s.pi[i] <= 0.0) continue;
      double lp = std::log(s.pi[i]);
      if (caught > 0) lp += static_cast<double>(caught) * std::log(s.p[i]);
      if (missed > 0) lp += static_cast<double>(missed) * std::log1p(-s.p[i]);
      acc = log_add_exp(acc, lp);
    }
    return acc;
  }

  struct Tally {
    long caught;
    long n;
  };
  std::vector<Tally> tallies_;
  long T_ = 0;
  long D_ = 0;
  double log_multiplicity_ = 0.0;
};

/// log N!/(prod n_h! (N-D)!) + sum_h n_h log P(x_h) + (N-D) log P(0).
inline double closed_loglik(const ClosedParamState& state, const ObservedData& data, int T) {
  return ClosedLikelihood(data, T)(state);
}

}  // namespace stopover
