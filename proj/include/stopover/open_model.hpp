#pragma once

// Likelihood of the integrated open-population stopover model: marked-animal
// histories (multinomial over distinct histories plus the latent all-zero
// history) and binomial counts of unmarked animals on resight days.
//
// Latent life histories z = (g, b, d) are marginalised with prefix sums in log
// space. For a history with first capture f and last detection l,
//
//   P(x) = mid(x) * exp(LU[f-1] - LW[l]) * sum_{b<=f} sum_{d>=l} beta_b Q(b,d) exp(LW[d] - LU[b-1])
//
// where Q(b,d) = sum_g pi_g P(retained b..d-1, departs d | g), LU is the prefix
// sum of log(1-p_t) over capture days, LW additionally includes log(1-s) over
// resight days, and mid(x) collects the detection factors on days f..l. The
// double sum depends on x only through (f, l), so the whole marked-data term
// costs O(G T^2) regardless of the number of histories.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "stopover/math.hpp"
#include "stopover/params.hpp"
#include "stopover/study_data.hpp"

namespace stopover {

/// beta[b-1] = fraction of the super-population arriving on day b. Days 1 and T
/// are open-ended; the last cell is the complement of the others.
inline std::vector<double> entry_probabilities(const ArrivalMixture& arrival, int T) {
  if (T < 2) throw std::invalid_argument("entry_probabilities: T must be >= 2");
  std::vector<double> beta(static_cast<std::size_t>(T), 0.0);
  for (int m = 0; m < arrival.M(); ++m) {
    const auto mi = static_cast<std::size_t>(m);
    const double w = arrival.w[mi], mu = arrival.mu[mi], sd = arrival.sigma[mi];
    beta[0] += w * std_normal_cdf((1.0 - mu) / sd);
    for (int b = 2; b <= T - 1; ++b)
      beta[static_cast<std::size_t>(b - 1)] += w * normal_interval_mass(b - 1.0, b, mu, sd);
  }
  double head = 0.0;
  for (int b = 1; b <= T - 1; ++b) head += beta[static_cast<std::size_t>(b - 1)];
  beta.back() = std::max(0.0, 1.0 - head);
  return beta;
}

inline double retention_probability(const BehaviourModel& behaviour, int g, int t, int a) {
  if (g < 0 || g >= behaviour.G()) throw std::out_of_range("retention_probability: group index");
  if (t < 1 || a < 1) throw std::out_of_range("retention_probability: day and age start at 1");
  return inv_logit(behaviour.retention_logit(g, t, a));
}

inline double capture_logit(const DetectionModel& det, const StudyDesign& design, int t) {
  const int loc = design.location_on(t);
  return det.cap0 + det.cap_e * design.effort_on(t) + (loc == 2 ? det.cap_loc2 : 0.0) +
         (loc == 3 ? det.cap_loc3 : 0.0);
}

inline double capture_probability(const DetectionModel& det, const StudyDesign& design, int t) {
  if (t < 1 || t > design.T() || !design.capture(t))
    throw std::invalid_argument("capture_probability: day " + std::to_string(t) + " is not a capture day");
  return inv_logit(capture_logit(det, design, t));
}

/// log P(z | theta) = log pi_g beta_{b-1} prod_{t=b}^{d-1} phi_{g,t,t-b+1} (1 - phi_{g,d,d-b+1})^{I(d<T)}.
inline double latent_history_logprob(const OpenParamState& state, std::span<const double> beta,
                                     const LatentHistory& z) {
  const int T = static_cast<int>(beta.size());
  const auto& beh = state.behaviour;
  if (z.g < 0 || z.g >= beh.G() || z.b < 1 || z.b > z.d || z.d > T)
    throw std::out_of_range("latent_history_logprob: z outside 1 <= b <= d <= T");
  const double pi = beh.pi[static_cast<std::size_t>(z.g)];
  const double bb = beta[static_cast<std::size_t>(z.b - 1)];
  if (pi <= 0.0 || bb <= 0.0) return kNegInf;
  double lp = std::log(pi) + std::log(bb);
  for (int t = z.b; t < z.d; ++t) lp += log_inv_logit(beh.retention_logit(z.g, t, t - z.b + 1));
  if (z.d < T) lp += log1m_inv_logit(beh.retention_logit(z.g, z.d, z.d - z.b + 1));
  return lp;
}

namespace detail {

/// (T+1) x (T+1) table indexed by 1-based days; row/column 0 unused or prefix base.
struct DayTable {
  int n = 0;
  std::vector<double> v;

  void reset(int T, double fill) {
    n = T + 1;
    v.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill);
  }
  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
};

struct ArrivalLayer {
  ArrivalMixture key;
  std::vector<double> log_beta;  // index b = 1..T
  std::vector<double> beta;

  bool matches(const OpenParamState& s) const { return key == s.arrival; }

  void build(const OpenParamState& s, int T) {
    key = s.arrival;
    beta.assign(1, 0.0);
    if (T == 1) beta.push_back(1.0);
    else {
      const auto b = entry_probabilities(s.arrival, T);
      beta.insert(beta.end(), b.begin(), b.end());
    }
    log_beta.resize(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) log_beta[i] = beta[i] > 0.0 ? std::log(beta[i]) : kNegInf;
  }
};

/// Retention products per group; independent of the group fractions.
struct RetentionLayer {
  std::vector<double> phi0;
  double gamma_t = 0.0, gamma_a = 0.0;
  std::vector<DayTable> cum;  // cum[g](b,t) = sum_{k=b}^{t-1} log phi_{g,k,k-b+1}
  std::vector<DayTable> dep;  // dep[g](b,d) = log(1 - phi_{g,d,d-b+1}) for d < T, 0 at d = T

  bool matches(const OpenParamState& s) const {
    const auto& b = s.behaviour;
    return phi0 == b.phi0 && gamma_t == b.gamma_t && gamma_a == b.gamma_a;
  }

  void build(const OpenParamState& s, int T) {
    const auto& beh = s.behaviour;
    phi0 = beh.phi0;
    gamma_t = beh.gamma_t;
    gamma_a = beh.gamma_a;
    const auto G = static_cast<std::size_t>(beh.G());
    cum.resize(G);
    dep.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
      cum[g].reset(T, kNegInf);
      dep[g].reset(T, kNegInf);
      for (int b = 1; b <= T; ++b) {
        double acc = 0.0;
        for (int t = b; t <= T; ++t) {
          cum[g](b, t) = acc;
          if (t < T) {
            const double eta = beh.retention_logit(static_cast<int>(g), t, t - b + 1);
            dep[g](b, t) = log1m_inv_logit(eta);
            acc += log_inv_logit(eta);
          } else {
            dep[g](b, t) = 0.0;
          }
        }
      }
    }
  }
};

/// Group-marginalised departure (Q) and presence (S) tables.
struct MixLayer {
  BehaviourModel key;
  DayTable logQ;  // log sum_g pi_g P(retained b..d-1, departs d)
  DayTable logS;  // log sum_g pi_g P(retained b..t-1)

  bool matches(const OpenParamState& s) const { return key == s.behaviour; }

  void build(const OpenParamState& s, const RetentionLayer& ret, int T) {
    key = s.behaviour;
    logQ.reset(T, kNegInf);
    logS.reset(T, kNegInf);
    for (int g = 0; g < key.G(); ++g) {
      const double pi = key.pi[static_cast<std::size_t>(g)];
      if (pi <= 0.0) continue;
      const double lpi = std::log(pi);
      const auto& cum = ret.cum[static_cast<std::size_t>(g)];
      const auto& dep = ret.dep[static_cast<std::size_t>(g)];
      for (int b = 1; b <= T; ++b)
        for (int t = b; t <= T; ++t) {
          logS(b, t) = log_add_exp(logS(b, t), lpi + cum(b, t));
          logQ(b, t) = log_add_exp(logQ(b, t), lpi + cum(b, t) + dep(b, t));
        }
    }
  }
};

struct DetectionLayer {
  DetectionModel key;
  std::vector<double> logp, log1mp;  // index t; meaningful on capture days
  std::vector<double> LU, LW;        // prefix sums, index 0..T
  double logs = 0.0, log1ms = 0.0;

  bool matches(const OpenParamState& s) const { return key == s.detection; }

  void build(const OpenParamState& s, const StudyDesign& design) {
    key = s.detection;
    const int T = design.T();
    // s = 1 would make every later resight day certain; keep the factor finite.
    const double sv = std::min(key.s, 1.0 - 0x1.0p-53);
    logs = sv > 0.0 ? std::log(sv) : kNegInf;
    log1ms = std::log1p(-sv);
    logp.assign(static_cast<std::size_t>(T) + 1, 0.0);
    log1mp.assign(static_cast<std::size_t>(T) + 1, 0.0);
    LU.assign(static_cast<std::size_t>(T) + 1, 0.0);
    LW.assign(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t);
      double u = 0.0, w = 0.0;
      if (design.capture(t)) {
        const double eta = capture_logit(key, design, t);
        logp[i] = log_inv_logit(eta);
        log1mp[i] = log1m_inv_logit(eta);
        u = log1mp[i];
        w = u;
      } else if (design.resight(t)) {
        w = log1ms;
      }
      LU[i] = LU[i - 1] + u;
      LW[i] = LW[i - 1] + w;
    }
  }
};

/// Tables combining behaviour and detection; independent of arrival.
struct JoinLayer {
  BehaviourModel bkey;
  DetectionModel dkey;
  DayTable RS;             // RS(b,l) = log sum_{d>=l} Q(b,d) exp(LW[d]),  b <= l
  std::vector<double> RZ;  // RZ(b)   = log sum_{d>=b} Q(b,d) exp(LU[d])
  DayTable E;              // E(b,t)  = log S(b,t) + LU[t] - LU[b-1]

  bool matches(const OpenParamState& s) const { return bkey == s.behaviour && dkey == s.detection; }

  void build(const OpenParamState& s, const MixLayer& mix, const DetectionLayer& det, int T) {
    bkey = s.behaviour;
    dkey = s.detection;
    RS.reset(T, kNegInf);
    E.reset(T, kNegInf);
    RZ.assign(static_cast<std::size_t>(T) + 1, kNegInf);
    for (int b = 1; b <= T; ++b) {
      double acc = kNegInf, accz = kNegInf;
      for (int d = T; d >= b; --d) {
        acc = log_add_exp(acc, mix.logQ(b, d) + det.LW[static_cast<std::size_t>(d)]);
        RS(b, d) = acc;
        accz = log_add_exp(accz, mix.logQ(b, d) + det.LU[static_cast<std::size_t>(d)]);
      }
      RZ[static_cast<std::size_t>(b)] = accz;
      const double lu0 = det.LU[static_cast<std::size_t>(b - 1)];
      for (int t = b; t <= T; ++t) E(b, t) = mix.logS(b, t) + det.LU[static_cast<std::size_t>(t)] - lu0;
    }
  }
};

/// log of the detection factors on days f..l of an observed history.
inline double history_mid_logprob(std::string_view x, const HistoryBounds& bd, const StudyDesign& design,
                                  const DetectionLayer& det) {
  double lp = 0.0;
  for (int t = bd.first; t <= bd.last; ++t) {
    const char c = x[static_cast<std::size_t>(t - 1)];
    const auto i = static_cast<std::size_t>(t);
    if (design.capture(t)) lp += c == code::captured ? det.logp[i] : det.log1mp[i];
    else if (design.resight(t)) lp += c == code::resighted ? det.logs : det.log1ms;
  }
  return lp;
}

/// log sum_{b<=f} beta_b exp(RS(b,l) - LU[b-1]) + LU[f-1] - LW[l].
inline double history_core(const ArrivalLayer& arr, const DetectionLayer& det, const JoinLayer& join, int f, int l) {
  double acc = kNegInf;
  for (int b = 1; b <= f; ++b)
    acc = log_add_exp(acc, arr.log_beta[static_cast<std::size_t>(b)] - det.LU[static_cast<std::size_t>(b - 1)] + join.RS(b, l));
  return acc + det.LU[static_cast<std::size_t>(f - 1)] - det.LW[static_cast<std::size_t>(l)];
}

inline double zero_core(const ArrivalLayer& arr, const DetectionLayer& det, const JoinLayer& join, int T) {
  double acc = kNegInf;
  for (int b = 1; b <= T; ++b)
    acc = log_add_exp(acc, arr.log_beta[static_cast<std::size_t>(b)] - det.LU[static_cast<std::size_t>(b - 1)] +
                               join.RZ[static_cast<std::size_t>(b)]);
  return std::min(acc, 0.0);
}

inline double zeta_core(const ArrivalLayer& arr, const DetectionModel& dm, const JoinLayer& join, int t) {
  double z = 0.0;
  for (int b = 1; b <= t; ++b) {
    const double lb = arr.log_beta[static_cast<std::size_t>(b)];
    if (lb == kNegInf) continue;
    z += std::exp(lb + join.E(b, t));
  }
  return std::clamp(z * dm.s, 0.0, 1.0);
}

/// All tables for one parameter state, built from scratch.
struct Tables {
  ArrivalLayer arr;
  RetentionLayer ret;
  MixLayer mix;
  DetectionLayer det;
  JoinLayer join;

  Tables(const OpenParamState& s, std::span<const double> beta, const StudyDesign& design) {
    const int T = design.T();
    if (static_cast<int>(beta.size()) != T) throw std::invalid_argument("beta length differs from T");
    arr.key = s.arrival;
    arr.beta.assign(1, 0.0);
    arr.beta.insert(arr.beta.end(), beta.begin(), beta.end());
    arr.log_beta.resize(arr.beta.size());
    for (std::size_t i = 0; i < arr.beta.size(); ++i)
      arr.log_beta[i] = arr.beta[i] > 0.0 ? std::log(arr.beta[i]) : kNegInf;
    ret.build(s, T);
    mix.build(s, ret, T);
    det.build(s, design);
    join.build(s, mix, det, T);
  }
};

}  // namespace detail

/// log P(x_h | theta), marginalised over admissible latent histories.
inline double history_loglik(const OpenParamState& state, std::span<const double> beta, const StudyDesign& design,
                             std::string_view x, const HistoryBounds& bounds) {
  const detail::Tables tab(state, beta, design);
  return detail::history_mid_logprob(x, bounds, design, tab.det) +
         detail::history_core(tab.arr, tab.det, tab.join, bounds.first, bounds.last);
}

/// log P(0 | theta): probability an animal in the super-population is never captured.
inline double zero_history_loglik(const OpenParamState& state, std::span<const double> beta,
                                  const StudyDesign& design) {
  const detail::Tables tab(state, beta, design);
  return detail::zero_core(tab.arr, tab.det, tab.join, design.T());
}

/// zeta_t: probability an animal is present, unmarked and counted on resight day t.
inline double count_success_prob(const OpenParamState& state, std::span<const double> beta,
                                 const StudyDesign& design, int t) {
  if (t < 1 || t > design.T() || !design.resight(t))
    throw std::invalid_argument("count_success_prob: day " + std::to_string(t) + " is not a resight day");
  const detail::Tables tab(state, beta, design);
  return detail::zeta_core(tab.arr, state.detection, tab.join, t);
}

/// Likelihood evaluator for one dataset with per-block caching.
///
/// Tables are kept in two slots: the committed state and the latest proposal.
/// A block is rebuilt only when its parameters differ from both slots, so a
/// rejected proposal never forces the current state's tables to be recomputed.
class OpenLikelihood {
 public:
  /// N-independent pieces; combine with N via marked()/counts().
  struct Parts {
    double hist = 0.0;        // sum_h n_h log P(x_h)
    double log_zero = 0.0;    // log P(0)
    std::vector<double> zeta;  // index t-1; 0 on non-resight days
  };

  OpenLikelihood(StudyDesign design, ObservedData data) : design_(std::move(design)), data_(std::move(data)) {
    design_.validate();
    validate_observations(design_, data_);
    const int T = design_.T();
    D_ = data_.marked();
    log_multiplicity_ = 0.0;
    std::map<std::pair<int, int>, long> pairs;
    n1_.assign(static_cast<std::size_t>(T) + 1, 0);
    n0c_ = n2_ = n0r_ = n1_;
    for (std::size_t h = 0; h < data_.H(); ++h) {
      const long n = data_.multiplicity[h];
      log_multiplicity_ += log_factorial(n);
      const auto bd = bounds_of(data_.histories[h]);
      pairs[{bd.last, bd.first}] += n;
      for (int t = bd.first; t <= bd.last; ++t) {
        const char c = data_.histories[h][static_cast<std::size_t>(t - 1)];
        const auto i = static_cast<std::size_t>(t);
        if (design_.capture(t)) (c == code::captured ? n1_ : n0c_)[i] += n;
        else if (design_.resight(t)) (c == code::resighted ? n2_ : n0r_)[i] += n;
      }
    }
    for (const auto& [key, n] : pairs) pairs_.push_back({key.second, key.first, n});
    // sorted by (l, f) through the map ordering
  }

  const StudyDesign& design() const { return design_; }
  const ObservedData& data() const { return data_; }
  long marked_count() const { return D_; }

  Parts parts(const OpenParamState& s) {
    const int T = design_.T();
    if (s.behaviour.G() < 1 || s.arrival.M() < 1) throw std::invalid_argument("state has no components");
    const auto& arr = fetch(cur_.arr, scr_.arr, s, [&](auto& L) { L.build(s, T); });
    const auto& ret = fetch(cur_.ret, scr_.ret, s, [&](auto& L) { L.build(s, T); });
    const auto& mix = fetch(cur_.mix, scr_.mix, s, [&](auto& L) { L.build(s, ret, T); });
    const auto& det = fetch(cur_.det, scr_.det, s, [&](auto& L) { L.build(s, design_); });
    const auto& join = fetch(cur_.join, scr_.join, s, [&](auto& L) { L.build(s, mix, det, T); });

    Parts out;
    out.hist = mid_sum(det);
    std::size_t i = 0;
    while (i < pairs_.size()) {
      const int l = pairs_[i].l;
      double acc = kNegInf;
      int b = 0;
      for (; i < pairs_.size() && pairs_[i].l == l; ++i) {
        const auto& pr = pairs_[i];
        for (; b < pr.f;) {
          ++b;
          acc = log_add_exp(acc, arr.log_beta[static_cast<std::size_t>(b)] - det.LU[static_cast<std::size_t>(b - 1)] +
                                     join.RS(b, l));
        }
        const double core = acc + det.LU[static_cast<std::size_t>(pr.f - 1)] - det.LW[static_cast<std::size_t>(l)];
        out.hist += static_cast<double>(pr.n) * core;
      }
    }
    if (std::isnan(out.hist)) out.hist = kNegInf;
    out.log_zero = detail::zero_core(arr, det, join, T);
    out.zeta.assign(static_cast<std::size_t>(T), 0.0);
    for (int t = 1; t <= T; ++t)
      if (design_.resight(t)) out.zeta[static_cast<std::size_t>(t - 1)] = detail::zeta_core(arr, s.detection, join, t);
    return out;
  }

  /// Log of the marked-data likelihood P(X, n | theta) given its N-independent parts.
  double marked(const Parts& p, long N) const {
    if (N < D_) return kNegInf;
    double v = log_factorial(N) - log_factorial(N - D_) - log_multiplicity_ + p.hist;
    if (N > D_) v += static_cast<double>(N - D_) * p.log_zero;
    return std::isnan(v) ? kNegInf : v;
  }

  /// Log of the binomial count likelihood P(y | theta).
  double counts(const Parts& p, long N) const {
    double v = 0.0;
    for (int t = 1; t <= design_.T(); ++t) {
      if (!design_.resight(t)) continue;
      const auto i = static_cast<std::size_t>(t - 1);
      v += binomial_logpmf(*data_.counts[i], N, p.zeta[i]);
    }
    return v;
  }

  double total(const Parts& p, long N) const { return marked(p, N) + counts(p, N); }

  double operator()(const OpenParamState& s) { return total(parts(s), s.N); }

  /// Promotes the tables built for `s` to the committed slot.
  void commit(const OpenParamState& s) {
    promote(cur_.arr, scr_.arr, s);
    promote(cur_.ret, scr_.ret, s);
    promote(cur_.mix, scr_.mix, s);
    promote(cur_.det, scr_.det, s);
    promote(cur_.join, scr_.join, s);
  }

  /// Drops all cached tables.
  void clear() {
    cur_ = {};
    scr_ = {};
  }

 private:
  struct Pair {
    int f, l;
    long n;
  };
  struct Slot {
    std::optional<detail::ArrivalLayer> arr;
    std::optional<detail::RetentionLayer> ret;
    std::optional<detail::MixLayer> mix;
    std::optional<detail::DetectionLayer> det;
    std::optional<detail::JoinLayer> join;
  };

  template <class Layer, class Build>
  static const Layer& fetch(std::optional<Layer>& cur, std::optional<Layer>& scr, const OpenParamState& s,
                            Build&& build) {
    if (cur && cur->matches(s)) return *cur;
    if (!scr || !scr->matches(s)) {
      if (!scr) scr.emplace();
      build(*scr);
    }
    return *scr;
  }

  template <class Layer>
  static void promote(std::optional<Layer>& cur, std::optional<Layer>& scr, const OpenParamState& s) {
    if (scr && scr->matches(s) && !(cur && cur->matches(s))) std::swap(cur, scr);
  }

  double mid_sum(const detail::DetectionLayer& det) const {
    double v = 0.0;
    auto add = [&v](long n, double lp) {
      if (n > 0) v += static_cast<double>(n) * lp;
    };
    for (int t = 1; t <= design_.T(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      add(n1_[i], det.logp[i]);
      add(n0c_[i], det.log1mp[i]);
      add(n2_[i], det.logs);
      add(n0r_[i], det.log1ms);
    }
    return v;
  }

  StudyDesign design_;
  ObservedData data_;
  long D_ = 0;
  double log_multiplicity_ = 0.0;
  std::vector<Pair> pairs_;
  std::vector<long> n1_, n0c_, n2_, n0r_;  // per-day detection tallies inside [f_h, l_h]
  Slot cur_, scr_;
};

inline double marked_loglik(const OpenParamState& state, const ObservedData& data, const StudyDesign& design) {
  OpenLikelihood lik(design, data);
  return lik.marked(lik.parts(state), state.N);
}

inline double counts_loglik(const OpenParamState& state, const ObservedData& data, const StudyDesign& design) {
  OpenLikelihood lik(design, data);
  return lik.counts(lik.parts(state), state.N);
}

/// log P(X, n | theta) + log P(y | theta).
inline double open_log_likelihood(const OpenParamState& state, const ObservedData& data, const StudyDesign& design) {
  OpenLikelihood lik(design, data);
  const auto p = lik.parts(state);
  return lik.marked(p, state.N) + lik.counts(p, state.N);
}

}  // namespace stopover
