#pragma once

// Forward simulation from the open and closed models, and the posterior
// predictive checks built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stopover/closed_model.hpp"
#include "stopover/diagnostics.hpp"
#include "stopover/errors.hpp"
#include "stopover/open_model.hpp"
#include "stopover/params.hpp"
#include "stopover/random.hpp"
#include "stopover/study_data.hpp"
#include "stopover/trace.hpp"

namespace stopover {

struct SimulatedAnimal {
  int g = 0;  // 0-based group
  int b = 1;
  int d = 1;
  bool marked = false;
};

struct SimulatedDataset {
  std::vector<SimulatedAnimal> animals;
  ObservedData data;
};

/// Draws one animal at a time from a fixed parameter state.
class AnimalSimulator {
 public:
  AnimalSimulator(const OpenParamState& state, const StudyDesign& design) : state_(state), design_(design) {
    const int T = design.T();
    beta_ = T >= 2 ? entry_probabilities(state.arrival, T) : std::vector<double>{1.0};
    p_.assign(static_cast<std::size_t>(T + 1), 0.0);
    for (int t = 1; t <= T; ++t)
      if (design.capture(t)) p_[static_cast<std::size_t>(t)] = capture_probability(state.detection, design, t);
  }

  /// Simulates one animal; writes its history into `x` and adds to `y` (size T) on
  /// resight days where it is present, unmarked and counted.
  SimulatedAnimal draw(Rng& rng, std::string& x, std::vector<long>& y) const {
    const int T = design_.T();
    SimulatedAnimal a;
    a.g = static_cast<int>(categorical(rng, state_.behaviour.pi));
    a.b = static_cast<int>(categorical(rng, beta_)) + 1;
    int t = a.b;
    while (t < T && bernoulli(rng, retention_probability(state_.behaviour, a.g, t, t - a.b + 1))) ++t;
    a.d = t;
    x.assign(static_cast<std::size_t>(T), code::missed);
    for (int u = 1; u <= T; ++u) {
      const auto i = static_cast<std::size_t>(u - 1);
      if (!design_.sampled(u)) {
        x[i] = code::missing;
        continue;
      }
      if (u < a.b || u > a.d) continue;
      if (design_.capture(u)) {
        if (bernoulli(rng, p_[static_cast<std::size_t>(u)])) {
          x[i] = code::captured;
          a.marked = true;
        }
      } else if (a.marked) {
        if (bernoulli(rng, state_.detection.s)) x[i] = code::resighted;
      } else if (bernoulli(rng, state_.detection.s)) {
        ++y[i];
      }
    }
    return a;
  }

  const std::vector<double>& beta() const { return beta_; }

 private:
  const OpenParamState& state_;
  const StudyDesign& design_;
  std::vector<double> beta_;
  std::vector<double> p_;
};

/// Simulates the N animals of the super-population and the data they induce.
inline SimulatedDataset simulate_dataset(const OpenParamState& state, const StudyDesign& design, Rng& rng,
                                         bool keep_animals = true) {
  if (state.N < 1) throw std::invalid_argument("simulate_dataset: N must be at least 1");
  const int T = design.T();
  AnimalSimulator sim(state, design);
  SimulatedDataset out;
  std::map<std::string, long> rows;
  std::vector<long> y(static_cast<std::size_t>(T), 0);
  std::string x;
  if (keep_animals) out.animals.reserve(static_cast<std::size_t>(state.N));
  for (long i = 0; i < state.N; ++i) {
    const auto a = sim.draw(rng, x, y);
    if (a.marked) ++rows[x];
    if (keep_animals) out.animals.push_back(a);
  }
  for (const auto& [h, n] : rows) {
    out.data.histories.push_back(h);
    out.data.multiplicity.push_back(n);
  }
  out.data.counts.assign(static_cast<std::size_t>(T), std::nullopt);
  for (int t = 1; t <= T; ++t)
    if (design.resight(t)) out.data.counts[static_cast<std::size_t>(t - 1)] = y[static_cast<std::size_t>(t - 1)];
  return out;
}

/// Closed-model capture histories for N animals over T capture days.
inline ObservedData simulate_closed(const ClosedParamState& state, int T, Rng& rng) {
  if (state.N < 1) throw std::invalid_argument("simulate_closed: N must be at least 1");
  std::map<std::string, long> rows;
  std::string x;
  for (long i = 0; i < state.N; ++i) {
    const auto g = categorical(rng, state.pi);
    x.assign(static_cast<std::size_t>(T), code::missed);
    bool caught = false;
    for (auto& c : x)
      if (bernoulli(rng, state.p[g])) {
        c = code::captured;
        caught = true;
      }
    if (caught) ++rows[x];
  }
  ObservedData data;
  for (const auto& [h, n] : rows) {
    data.histories.push_back(h);
    data.multiplicity.push_back(n);
  }
  data.counts.assign(static_cast<std::size_t>(T), std::nullopt);
  return data;
}

// --- posterior predictive checks -------------------------------------------------------

namespace detail {

/// Trace indices for `draws` posterior draws: without replacement when possible.
inline std::vector<std::size_t> pick_draws(std::size_t available, long draws, Rng& rng) {
  if (available == 0) throw DataError("posterior predictive check: empty trace");
  if (draws < 1) throw std::invalid_argument("posterior predictive check: draws must be >= 1");
  std::vector<std::size_t> out;
  const auto want = static_cast<std::size_t>(draws);
  if (want <= available) {
    std::vector<std::size_t> idx(available);
    for (std::size_t i = 0; i < available; ++i) idx[i] = i;
    for (std::size_t i = 0; i < want; ++i) {
      const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<long>(i), static_cast<long>(available - 1)));
      std::swap(idx[i], idx[j]);
      out.push_back(idx[i]);
    }
  } else {
    for (std::size_t i = 0; i < want; ++i)
      out.push_back(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(available - 1))));
  }
  return out;
}

struct PredictiveDraw {
  std::size_t index;
  std::uint64_t seed;
};

inline std::vector<PredictiveDraw> plan_draws(std::size_t available, long draws, Rng& rng) {
  const auto idx = pick_draws(available, draws, rng);
  const std::uint64_t base = rng();
  std::vector<PredictiveDraw> out;
  for (std::size_t i = 0; i < idx.size(); ++i) out.push_back({idx[i], derive_seed(base, i)});
  return out;
}

}  // namespace detail

struct GofLoglikRow {
  long iteration;
  double real;
  double simulated;
};

/// For each sampled state: log-likelihood of the real data and of data simulated from it.
inline std::vector<GofLoglikRow> gof_loglik_density(const OpenTrace& trace, const ObservedData& data,
                                                    const StudyDesign& design, long draws, Rng& rng) {
  std::vector<GofLoglikRow> out;
  for (const auto& pd : detail::plan_draws(trace.size(), draws, rng)) {
    const auto& r = trace.records[pd.index];
    Rng local(pd.seed);
    const auto sim = simulate_dataset(r.state, design, local, false);
    out.push_back({r.iteration, open_log_likelihood(r.state, data, design),
                   open_log_likelihood(r.state, sim.data, design)});
  }
  return out;
}

struct OccasionStats {
  std::vector<int> capture_days;
  std::vector<int> resight_days;
  std::vector<long> iterations;
  std::vector<std::vector<long>> first_caught;  // draw x capture day
  std::vector<std::vector<long>> unmarked;      // draw x resight day
  std::vector<long> real_first_caught;
  std::vector<long> real_unmarked;
};

/// Number of animals first caught on each capture day.
inline std::vector<long> first_caught_counts(const ObservedData& data, const StudyDesign& design) {
  std::vector<long> by_day(static_cast<std::size_t>(design.T() + 1), 0);
  for (std::size_t h = 0; h < data.H(); ++h) by_day[static_cast<std::size_t>(bounds_of(data.histories[h]).first)] += data.multiplicity[h];
  std::vector<long> out;
  for (int t = 1; t <= design.T(); ++t)
    if (design.capture(t)) out.push_back(by_day[static_cast<std::size_t>(t)]);
  return out;
}

inline std::vector<long> unmarked_counts(const ObservedData& data, const StudyDesign& design) {
  std::vector<long> out;
  for (int t = 1; t <= design.T(); ++t)
    if (design.resight(t)) out.push_back(data.counts[static_cast<std::size_t>(t - 1)].value_or(0));
  return out;
}

inline OccasionStats gof_occasion_stats(const OpenTrace& trace, const ObservedData& data, const StudyDesign& design,
                                        long draws, Rng& rng) {
  OccasionStats out;
  for (int t = 1; t <= design.T(); ++t) {
    if (design.capture(t)) out.capture_days.push_back(t);
    if (design.resight(t)) out.resight_days.push_back(t);
  }
  out.real_first_caught = first_caught_counts(data, design);
  out.real_unmarked = unmarked_counts(data, design);
  for (const auto& pd : detail::plan_draws(trace.size(), draws, rng)) {
    const auto& r = trace.records[pd.index];
    Rng local(pd.seed);
    const auto sim = simulate_dataset(r.state, design, local, false);
    out.iterations.push_back(r.iteration);
    out.first_caught.push_back(first_caught_counts(sim.data, design));
    out.unmarked.push_back(unmarked_counts(sim.data, design));
  }
  return out;
}

/// Box-plot whiskers: most extreme data within 1.5 IQR of the quartiles.
inline std::pair<double, double> tukey_whiskers(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("tukey_whiskers: empty sample");
  std::sort(v.begin(), v.end());
  const double q1 = quantile_sorted(v, 0.25), q3 = quantile_sorted(v, 0.75);
  const double lo = q1 - 1.5 * (q3 - q1), hi = q3 + 1.5 * (q3 - q1);
  const double wl = *std::lower_bound(v.begin(), v.end(), lo);
  const double wh = *std::prev(std::upper_bound(v.begin(), v.end(), hi));
  return {wl, wh};
}

/// Fraction of occasions whose real statistic lies within the simulated whiskers.
inline double occasion_coverage(const OccasionStats& st) {
  long inside = 0, total = 0;
  auto check = [&](const std::vector<std::vector<long>>& sims, const std::vector<long>& real) {
    for (std::size_t j = 0; j < real.size(); ++j) {
      std::vector<double> col;
      for (const auto& row : sims) col.push_back(static_cast<double>(row[j]));
      const auto [lo, hi] = tukey_whiskers(col);
      const double r = static_cast<double>(real[j]);
      inside += r >= lo && r <= hi ? 1 : 0;
      ++total;
    }
  };
  check(st.first_caught, st.real_first_caught);
  check(st.unmarked, st.real_unmarked);
  return total ? static_cast<double>(inside) / static_cast<double>(total) : 1.0;
}

/// Location of the maximum of a Gaussian kernel density estimate (Silverman bandwidth).
inline double kde_mode(const std::vector<double>& v, int grid = 1024) {
  if (v.size() < 2) throw std::invalid_argument("kde_mode: need at least two values");
  const auto s = summarize(v);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(s.sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = s.sd > 0.0 ? s.sd : 1.0;
  const double h = 0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
  const double lo = sorted.front() - 3.0 * h, hi = sorted.back() + 3.0 * h;
  double best_x = lo, best = -1.0;
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    double f = 0.0;
    for (double u : v) f += std::exp(-0.5 * (x - u) * (x - u) / (h * h));
    if (f > best) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

struct DurationRow {
  long iteration;
  int group;  // 1-based after sorting by phi0
  long detected;
  double mean;
  double sd;
};

/// Observed stopover durations d - b + 1 of animals caught at least once, per
/// behavioural group, from cohorts simulated at states with the given G.
inline std::vector<DurationRow> observed_stopover_durations(const OpenTrace& trace, const StudyDesign& design,
                                                            long draws, Rng& rng, int G) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (trace.records[i].state.G() == G) eligible.push_back(i);
  if (eligible.empty()) throw DataError("observed_stopover_durations: no retained state has G=" + std::to_string(G));
  std::vector<DurationRow> out;
  for (const auto& pd : detail::plan_draws(eligible.size(), draws, rng)) {
    const auto& r = trace.records[eligible[pd.index]];
    const auto state = sorted_labels(r.state);
    Rng local(pd.seed);
    const auto sim = simulate_dataset(state, design, local, true);
    std::vector<double> sum(static_cast<std::size_t>(G), 0.0), sq(static_cast<std::size_t>(G), 0.0);
    std::vector<long> n(static_cast<std::size_t>(G), 0);
    for (const auto& a : sim.animals) {
      if (!a.marked) continue;
      const auto g = static_cast<std::size_t>(a.g);
      const double len = a.d - a.b + 1;
      sum[g] += len;
      sq[g] += len * len;
      ++n[g];
    }
    for (int g = 0; g < G; ++g) {
      const auto i = static_cast<std::size_t>(g);
      const double k = static_cast<double>(n[i]);
      const double mean = n[i] ? sum[i] / k : std::numeric_limits<double>::quiet_NaN();
      const double var = n[i] > 1 ? (sq[i] - k * mean * mean) / (k - 1.0) : std::numeric_limits<double>::quiet_NaN();
      out.push_back({r.iteration, g + 1, n[i], mean, std::sqrt(std::max(var, 0.0))});
    }
  }
  return out;
}

}  // namespace stopover
