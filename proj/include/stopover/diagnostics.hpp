#pragma once

// Post-processing of retained chain states: model visit frequencies, the Geweke
// statistic, conditional and model-averaged summaries.
//
// Component labels are free during sampling. Summaries that refer to a component
// by index first sort arrival groups by mean, behavioural groups by phi0 and
// closed-model groups by p.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopover/errors.hpp"
#include "stopover/open_model.hpp"
#include "stopover/params.hpp"
#include "stopover/trace.hpp"

namespace stopover {

// --- model probabilities ------------------------------------------------------------

/// Visit frequency of each (M, G); closed-model states report M = 1.
template <class State>
std::map<std::pair<int, int>, double> model_probabilities(const ChainTrace<State>& trace) {
  if (trace.empty()) throw DataError("model_probabilities: empty trace");
  std::map<std::pair<int, int>, long> visits;
  for (const auto& r : trace.records) ++visits[{r.state.M(), r.state.G()}];
  std::map<std::pair<int, int>, double> out;
  const double n = static_cast<double>(trace.size());
  for (const auto& [k, c] : visits) out[k] = static_cast<double>(c) / n;
  return out;
}

/// Marginal visit frequency of G.
template <class State>
std::map<int, double> g_probabilities(const ChainTrace<State>& trace) {
  std::map<int, double> out;
  for (const auto& [k, p] : model_probabilities(trace)) out[k.second] += p;
  return out;
}

template <class State>
std::map<int, double> m_probabilities(const ChainTrace<State>& trace) {
  std::map<int, double> out;
  for (const auto& [k, p] : model_probabilities(trace)) out[k.first] += p;
  return out;
}

// --- Geweke -------------------------------------------------------------------------

namespace detail {

struct WindowStats {
  double mean = 0.0;
  double var_of_mean = 0.0;
};

/// Window mean and the batch-means estimate of its variance, floor(sqrt(n)) batches.
inline WindowStats batch_means(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const std::size_t size = n / batches;
  WindowStats w;
  w.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> means(batches);
  for (std::size_t k = 0; k < batches; ++k) {
    double s = 0.0;
    for (std::size_t i = k * size; i < (k + 1) * size; ++i) s += x[i];
    means[k] = s / static_cast<double>(size);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  w.var_of_mean = ss / static_cast<double>(batches - 1) / static_cast<double>(batches);
  return w;
}

}  // namespace detail

/// Geweke z comparing the first and last windows; nullopt for a degenerate window.
inline std::optional<double> geweke_z(std::span<const double> series, double first_frac = 0.1,
                                      double last_frac = 0.5) {
  if (series.size() < 100) throw std::invalid_argument("geweke_z: series needs at least 100 values");
  if (!(first_frac > 0.0 && last_frac > 0.0 && first_frac + last_frac <= 1.0))
    throw std::invalid_argument("geweke_z: window fractions must be positive and sum to at most 1");
  const std::size_t n = series.size();
  const auto n1 = static_cast<std::size_t>(std::floor(first_frac * static_cast<double>(n)));
  const auto n2 = static_cast<std::size_t>(std::floor(last_frac * static_cast<double>(n)));
  if (n1 < 4 || n2 < 4) throw std::invalid_argument("geweke_z: windows too short");
  const auto a = detail::batch_means(series.first(n1));
  const auto b = detail::batch_means(series.last(n2));
  const double v = a.var_of_mean + b.var_of_mean;
  if (!(a.var_of_mean > 0.0) || !(b.var_of_mean > 0.0) || !std::isfinite(v)) return std::nullopt;
  return (a.mean - b.mean) / std::sqrt(v);
}

// --- summaries ----------------------------------------------------------------------

struct PosteriorSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

/// Type-7 (linear interpolation) sample quantile of sorted values.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline PosteriorSummary summarize(std::vector<double> values, double level = 0.95) {
  if (values.empty()) throw DataError("summarize: empty sample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("summarize: level must lie in (0,1)");
  PosteriorSummary s;
  s.n = values.size();
  s.level = level;
  const double n = static_cast<double>(s.n);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = s.n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  s.lower = quantile_sorted(values, (1.0 - level) / 2.0);
  s.upper = quantile_sorted(values, 1.0 - (1.0 - level) / 2.0);
  return s;
}

// --- label alignment ----------------------------------------------------------------

namespace detail {

inline std::vector<std::size_t> order_by(const std::vector<double>& key) {
  std::vector<std::size_t> idx(key.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return idx;
}

inline std::vector<double> permute(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(v.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace detail

inline OpenParamState sorted_labels(OpenParamState s) {
  const auto ai = detail::order_by(s.arrival.mu);
  s.arrival.w = detail::permute(s.arrival.w, ai);
  s.arrival.mu = detail::permute(s.arrival.mu, ai);
  s.arrival.sigma = detail::permute(s.arrival.sigma, ai);
  const auto bi = detail::order_by(s.behaviour.phi0);
  s.behaviour.pi = detail::permute(s.behaviour.pi, bi);
  s.behaviour.phi0 = detail::permute(s.behaviour.phi0, bi);
  return s;
}

inline ClosedParamState sorted_labels(ClosedParamState s) {
  const auto idx = detail::order_by(s.p);
  s.pi = detail::permute(s.pi, idx);
  s.p = detail::permute(s.p, idx);
  return s;
}

// --- selection ------------------------------------------------------------------------

struct ModelCondition {
  std::optional<int> M;
  std::optional<int> G;

  template <class State>
  bool matches(const State& s) const {
    return (!M || s.M() == *M) && (!G || s.G() == *G);
  }
};

/// Value of a named quantity in a (label-sorted) state. Scalars: N, M, G, gamma_t,
/// gamma_a, cap0, cap_e, cap_loc2, cap_loc3, s. Components, 1-based: w[k], mu[k],
/// sigma[k], pi[k], phi0[k]; closed model: N, G, pi[k], p[k].
inline double select(const OpenParamState& s, const std::string& q) {
  const auto& d = s.detection;
  const auto& b = s.behaviour;
  if (q == "N") return static_cast<double>(s.N);
  if (q == "M") return s.M();
  if (q == "G") return s.G();
  if (q == "gamma_t") return b.gamma_t;
  if (q == "gamma_a") return b.gamma_a;
  if (q == "cap0") return d.cap0;
  if (q == "cap_e") return d.cap_e;
  if (q == "cap_loc2") return d.cap_loc2;
  if (q == "cap_loc3") return d.cap_loc3;
  if (q == "s") return d.s;
  const auto open = q.find('[');
  if (open != std::string::npos && q.back() == ']') {
    const auto k = io::parse_long(std::string_view(q).substr(open + 1, q.size() - open - 2));
    const auto name = q.substr(0, open);
    const std::vector<double>* v = nullptr;
    if (name == "w") v = &s.arrival.w;
    else if (name == "mu") v = &s.arrival.mu;
    else if (name == "sigma") v = &s.arrival.sigma;
    else if (name == "pi") v = &b.pi;
    else if (name == "phi0") v = &b.phi0;
    if (v && k && *k >= 1 && static_cast<std::size_t>(*k) <= v->size()) return (*v)[static_cast<std::size_t>(*k - 1)];
    if (v && k) throw std::out_of_range("selector '" + q + "': component index outside the state");
  }
  throw std::invalid_argument("unknown quantity '" + q + "'");
}

inline double select(const ClosedParamState& s, const std::string& q) {
  if (q == "N") return static_cast<double>(s.N);
  if (q == "G") return s.G();
  const auto open = q.find('[');
  if (open != std::string::npos && q.back() == ']') {
    const auto k = io::parse_long(std::string_view(q).substr(open + 1, q.size() - open - 2));
    const auto name = q.substr(0, open);
    const std::vector<double>* v = name == "pi" ? &s.pi : name == "p" ? &s.p : nullptr;
    if (v && k && *k >= 1 && static_cast<std::size_t>(*k) <= v->size()) return (*v)[static_cast<std::size_t>(*k - 1)];
    if (v && k) throw std::out_of_range("selector '" + q + "': component index outside the state");
  }
  throw std::invalid_argument("unknown quantity '" + q + "'");
}

/// Scalar quantities present in every state, for per-parameter diagnostics.
inline std::vector<std::string> scalar_quantities(ModelKind kind) {
  if (kind == ModelKind::Closed) return {"N", "G"};
  return {"N", "M", "G", "gamma_t", "gamma_a", "cap0", "cap_e", "cap_loc2", "cap_loc3", "s"};
}

/// Component-indexed quantities for a given component count.
inline std::vector<std::string> component_quantities(ModelKind kind, int M, int G) {
  std::vector<std::string> out;
  auto add = [&](const char* name, int K) {
    for (int k = 1; k <= K; ++k) out.push_back(std::string(name) + '[' + std::to_string(k) + ']');
  };
  if (kind == ModelKind::Closed) {
    add("pi", G);
    add("p", G);
    return out;
  }
  add("w", M);
  add("mu", M);
  add("sigma", M);
  add("pi", G);
  add("phi0", G);
  return out;
}

template <class State>
std::vector<double> series(const ChainTrace<State>& trace, const std::string& quantity,
                           const ModelCondition& cond = {}) {
  std::vector<double> out;
  for (const auto& r : trace.records)
    if (cond.matches(r.state)) {
      if (quantity == "loglik") out.push_back(r.loglik);
      else if (quantity == "logprior") out.push_back(r.logprior);
      else out.push_back(select(sorted_labels(r.state), quantity));
    }
  return out;
}

template <class State>
PosteriorSummary conditional_summary(const ChainTrace<State>& trace, const ModelCondition& cond,
                                     const std::string& quantity, double level = 0.95) {
  auto v = series(trace, quantity, cond);
  if (v.empty()) throw DataError("conditional_summary: no retained state matches the condition");
  return summarize(std::move(v), level);
}

/// Per-day summaries of beta pooled across every retained state.
inline std::vector<PosteriorSummary> model_averaged_entry(const OpenTrace& trace, int T, double level = 0.95) {
  if (trace.empty()) throw DataError("model_averaged_entry: empty trace");
  std::vector<std::vector<double>> by_day(static_cast<std::size_t>(T));
  for (const auto& r : trace.records) {
    const auto beta = entry_probabilities(r.state.arrival, T);
    for (std::size_t t = 0; t < beta.size(); ++t) by_day[t].push_back(beta[t]);
  }
  std::vector<PosteriorSummary> out;
  for (auto& v : by_day) out.push_back(summarize(std::move(v), level));
  return out;
}

struct RetentionSample {
  long iteration;
  int group;  // 1-based after sorting by phi0
  double phi;
  double pi;
};

/// (phi_{g,t,a}, pi_g) pairs from every retained state with the given G.
inline std::vector<RetentionSample> retention_group_density(const OpenTrace& trace, int t, int a, int G) {
  std::vector<RetentionSample> out;
  for (const auto& r : trace.records) {
    if (r.state.G() != G) continue;
    const auto s = sorted_labels(r.state);
    for (int g = 0; g < G; ++g)
      out.push_back({r.iteration, g + 1, retention_probability(s.behaviour, g, t, a),
                     s.behaviour.pi[static_cast<std::size_t>(g)]});
  }
  if (out.empty()) throw DataError("retention_group_density: no retained state has G=" + std::to_string(G));
  return out;
}

}  // namespace stopover
