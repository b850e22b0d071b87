#pragma once

// Reversible-jump MCMC for the open stopover model (arrival groups M and
// behavioural groups G both unknown) and for the closed heterogeneous-capture
// model (G unknown).
//
// One iteration is a within-model sweep in block order
//   arrival -> behaviour -> detection -> N -> proportions
// followed by an M move and a G move, each attempted with its configured
// probability. Births split a uniformly chosen donor's mass and draw the new
// component from its prior; deaths merge a uniformly chosen component into
// another. Acceptance uses the full log-posterior difference (the joint prior
// carries the K! (K-1)! mixture factors), the reverse/forward proposal
// probabilities and the density of the prior-drawn component.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stopover/closed_model.hpp"
#include "stopover/errors.hpp"
#include "stopover/open_model.hpp"
#include "stopover/priors.hpp"
#include "stopover/random.hpp"
#include "stopover/trace.hpp"

namespace stopover {

enum class NProposal { SymmetricWalk, Poisson };

struct SamplerConfig {
  long iterations = 20000;  // total, including burn-in
  long burn_in = 5000;
  long thin = 1;
  double gamma_prop = 0.5;  // proportion pair-update scale, in (0,1)
  std::map<std::string, double> step_sizes;
  NProposal n_proposal = NProposal::SymmetricWalk;
  double m_move_prob = 0.5;  // per-iteration probability of attempting an M move
  double g_move_prob = 0.5;  // ... and a G move
  std::uint64_t seed = 1;
  bool adapt = true;       // tune step sizes during burn-in
  long tune_batch = 50;
  long check_every = 1000;  // cached vs recomputed likelihood audit

  double step(const std::string& name) const {
    const auto it = step_sizes.find(name);
    if (it == step_sizes.end()) throw std::invalid_argument("sampler: no step size for '" + name + "'");
    return it->second;
  }

  void validate() const {
    if (iterations < 1 || burn_in < 0 || thin < 1) throw std::invalid_argument("sampler: need iterations >= 1, thin >= 1");
    if (burn_in >= iterations) throw std::invalid_argument("sampler: burn_in must be below iterations");
    if (!(gamma_prop > 0.0 && gamma_prop < 1.0)) throw std::invalid_argument("sampler: gamma_prop must lie in (0,1)");
    for (double p : {m_move_prob, g_move_prob})
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sampler: move probabilities must lie in [0,1]");
    for (const auto& [name, v] : step_sizes)
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("sampler: step '" + name + "' must be positive");
    if (tune_batch < 1 || check_every < 1) throw std::invalid_argument("sampler: tune_batch and check_every must be >= 1");
  }

  static SamplerConfig open_defaults() {
    SamplerConfig c;
    c.step_sizes = {{"mu", 1.0},      {"sigma", 0.5},  {"phi0", 0.3},     {"gamma_t", 0.02},
                    {"gamma_a", 0.02}, {"cap0", 0.2},   {"cap_e", 0.02},   {"cap_loc2", 0.2},
                    {"cap_loc3", 0.2}, {"s", 0.02},     {"N", 250.0}};
    return c;
  }

  static SamplerConfig closed_defaults() {
    SamplerConfig c;
    c.n_proposal = NProposal::Poisson;
    c.m_move_prob = 0.0;
    c.step_sizes = {{"p", 0.05}};
    return c;
  }
};

/// Birth/death proposal probabilities over a component count with reflecting ends.
struct TransitionProbs {
  int lo = 1;
  int hi = 1;

  double up(int k) const {
    if (lo >= hi || k >= hi) return 0.0;
    return k <= lo ? 1.0 : 0.5;
  }
  double down(int k) const {
    if (lo >= hi || k <= lo) return 0.0;
    return k >= hi ? 1.0 : 0.5;
  }
};

struct MoveCounter {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

using MoveStats = std::map<std::string, MoveCounter>;

inline void record(MoveStats& stats, const std::string& move, bool accepted) {
  auto& c = stats[move];
  ++c.proposed;
  if (accepted) ++c.accepted;
}

inline bool mh_accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform01(rng)) < log_ratio;
}

/// Log-posterior evaluation for targets that need nothing beyond the value.
struct ScalarEval {
  double value = 0.0;
  double total() const { return value; }
};

// --- generic within-model moves -----------------------------------------------

/// Gaussian random-walk update of the scalar selected by `access(State&) -> double&`.
template <class State, class Eval, class Target, class Access>
bool mh_scalar_update(State& state, Eval& current, Target&& target, Access&& access, double step, Rng& rng) {
  State prop = state;
  access(prop) += normal(rng, 0.0, step);
  Eval ev = target(prop);
  if (!mh_accept(ev.total() - current.total(), rng)) return false;
  state = std::move(prop);
  current = std::move(ev);
  return true;
}

/// Moves mass x ~ U(-eps, eps), eps = gamma (p_a + p_b), between two random components.
template <class State, class Eval, class Target, class Access>
bool proportion_pair_update(State& state, Eval& current, Target&& target, Access&& access, double gamma, Rng& rng) {
  const auto k = static_cast<long>(access(state).size());
  if (k < 2) return false;
  const auto a = static_cast<std::size_t>(uniform_int(rng, 0, k - 1));
  auto b = static_cast<std::size_t>(uniform_int(rng, 0, k - 2));
  if (b >= a) ++b;
  State prop = state;
  auto& p = access(prop);
  const double pair = p[a] + p[b];
  const double eps = gamma * pair;
  const double x = uniform(rng, -eps, eps);
  const double pa = p[a] + x;
  if (pa < 0.0 || pa > pair) return false;
  p[a] = pa;
  p[b] = pair - pa;
  Eval ev = target(prop);
  if (!mh_accept(ev.total() - current.total(), rng)) return false;
  state = std::move(prop);
  current = std::move(ev);
  return true;
}

// --- trans-dimensional moves ------------------------------------------------------

/// Log acceptance argument for a birth k -> k+1 with donor mass w_a and new-component
/// proposal log-density log_q; delta_log_post includes the full joint prior.
inline double birth_log_ratio(double delta_log_post, int k, double donor_mass, double log_q, const TransitionProbs& tp) {
  const double kd = k;
  const double reverse = std::log(tp.down(k + 1)) - std::log(kd + 1.0) - std::log(kd);
  const double forward = std::log(tp.up(k)) - std::log(kd) - std::log(donor_mass) + log_q;
  return delta_log_post + reverse - forward;
}

/// Log acceptance argument for a death k -> k-1 where the surviving component ends
/// with mass merged_mass and the removed component had proposal log-density log_q.
inline double death_log_ratio(double delta_log_post, int k, double merged_mass, double log_q, const TransitionProbs& tp) {
  const double kd = k;
  const double reverse = std::log(tp.up(k - 1)) - std::log(kd - 1.0) - std::log(merged_mass) + log_q;
  const double forward = std::log(tp.down(k)) - std::log(kd) - std::log(kd - 1.0);
  return delta_log_post + reverse - forward;
}

/// Birth move. `props(State&)` yields the proportions; `grow(State&, Rng&)` appends the
/// new component's parameters drawn from its prior and returns their log-density.
template <class State, class Eval, class Target, class Props, class Grow>
bool birth_move(State& state, Eval& current, Target&& target, const TransitionProbs& tp, Props&& props, Grow&& grow,
                Rng& rng) {
  const int k = static_cast<int>(props(state).size());
  if (tp.up(k) <= 0.0) return false;
  State prop = state;
  auto& w = props(prop);
  const auto a = static_cast<std::size_t>(uniform_int(rng, 0, k - 1));
  const double wa = w[a];
  const double x = uniform(rng, 0.0, wa);
  w[a] = wa - x;
  w.push_back(x);
  const double log_q = grow(prop, rng);
  if (!(wa > 0.0)) return false;
  Eval ev = target(prop);
  const double lr = birth_log_ratio(ev.total() - current.total(), k, wa, log_q, tp);
  if (!mh_accept(lr, rng)) return false;
  state = std::move(prop);
  current = std::move(ev);
  return true;
}

/// Death move. `shrink(State&, a)` removes component a from every block (proportions
/// included) and returns the prior log-density of its parameters.
template <class State, class Eval, class Target, class Props, class Shrink>
bool death_move(State& state, Eval& current, Target&& target, const TransitionProbs& tp, Props&& props,
                Shrink&& shrink, Rng& rng) {
  const int k = static_cast<int>(props(state).size());
  if (k < 2 || tp.down(k) <= 0.0) return false;
  const auto a = static_cast<std::size_t>(uniform_int(rng, 0, k - 1));
  auto b = static_cast<std::size_t>(uniform_int(rng, 0, k - 2));
  if (b >= a) ++b;
  State prop = state;
  auto& w = props(prop);
  const double merged = w[a] + w[b];
  w[b] = merged;
  const double log_q = shrink(prop, a);
  Eval ev = target(prop);
  const double lr = death_log_ratio(ev.total() - current.total(), k, merged, log_q, tp);
  if (!mh_accept(lr, rng)) return false;
  state = std::move(prop);
  current = std::move(ev);
  return true;
}

/// Symmetric integer walk N' = N + U{-h..h}; proposals below n_min are rejected unevaluated.
template <class State, class Eval, class Target>
bool update_N_walk(State& state, Eval& current, Target&& target, long n_min, long half_width, Rng& rng) {
  State prop = state;
  prop.N += uniform_int(rng, -half_width, half_width);
  if (prop.N < n_min) return false;
  Eval ev = target(prop);
  if (!mh_accept(ev.total() - current.total(), rng)) return false;
  state = std::move(prop);
  current = std::move(ev);
  return true;
}

/// N' ~ Poisson(N) with the Hastings correction; proposals outside [n_min, n_max]
/// are rejected unevaluated.
template <class State, class Eval, class Target>
bool update_N_poisson(State& state, Eval& current, Target&& target, long n_min, long n_max, Rng& rng) {
  State prop = state;
  prop.N = poisson(rng, static_cast<double>(std::max(state.N, 1L)));
  if (prop.N < n_min || prop.N > n_max) return false;
  Eval ev = target(prop);
  const double hastings = poisson_logpmf(state.N, static_cast<double>(std::max(prop.N, 1L))) -
                          poisson_logpmf(prop.N, static_cast<double>(std::max(state.N, 1L)));
  if (!mh_accept(ev.total() - current.total() + hastings, rng)) return false;
  state = std::move(prop);
  current = std::move(ev);
  return true;
}

// --- tuning -----------------------------------------------------------------------

/// Batch-wise step-size controller. After each batch, a step whose batch acceptance
/// rate falls outside [lo, hi] is scaled by exp(-+delta_k), delta_k = min(0.5, 1/sqrt(k)).
class StepTuner {
 public:
  explicit StepTuner(double lo = 0.2, double hi = 0.4) : lo_(lo), hi_(hi) {}

  void record(const std::string& name, bool accepted) {
    auto& c = batch_[name];
    ++c.proposed;
    if (accepted) ++c.accepted;
  }

  /// Adjusts `steps` (and gamma_prop, tracked under that name) from the finished batch.
  void end_batch(std::map<std::string, double>& steps, double* gamma_prop = nullptr) {
    ++batches_;
    const double delta = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(batches_)));
    for (const auto& [name, c] : batch_) {
      if (c.proposed == 0) continue;
      const double rate = c.rate();
      double factor = 1.0;
      if (rate < lo_) factor = std::exp(-delta);
      else if (rate > hi_) factor = std::exp(delta);
      if (factor == 1.0) continue;
      if (name == "gamma_prop") {
        if (gamma_prop) *gamma_prop = std::clamp(*gamma_prop * factor, 0.01, 0.99);
        continue;
      }
      const auto it = steps.find(name);
      if (it == steps.end()) continue;
      const double floor = name == "N" ? 1.0 : 1e-8;
      it->second = std::clamp(it->second * factor, floor, 1e8);
    }
    batch_.clear();
  }

  long batches() const { return batches_; }

 private:
  double lo_, hi_;
  long batches_ = 0;
  std::map<std::string, MoveCounter> batch_;
};

template <class State>
struct ChainResult {
  ChainTrace<State> trace;
  MoveStats stats;
  SamplerConfig tuned;  // step sizes in force after burn-in
};

// --- open model ---------------------------------------------------------------------

class OpenSampler {
 public:
  struct Eval {
    double loglik = kNegInf;
    double logprior = kNegInf;
    OpenLikelihood::Parts parts;
    double total() const { return loglik + logprior; }
  };

  OpenSampler(StudyDesign design, ObservedData data, OpenPriors priors, SamplerConfig config)
      : lik_(std::move(design), std::move(data)), priors_(priors), config_(std::move(config)) {
    priors_.validate();
    config_.validate();
    m_moves_ = {1, priors_.M_max};
    g_moves_ = {1, priors_.G_max};
  }

  const OpenLikelihood& likelihood() const { return lik_; }
  const SamplerConfig& config() const { return config_; }
  const OpenPriors& priors() const { return priors_; }
  long marked_count() const { return lik_.marked_count(); }

  /// Default starting point: one arrival group centred on the study, one behavioural group.
  OpenParamState default_init() const {
    const int T = lik_.design().T();
    OpenParamState s;
    s.arrival = {{1.0}, {T / 2.0}, {std::clamp(T / 4.0, priors_.sigma_lower * 2.0, priors_.sigma_upper)}};
    s.behaviour = {{1.0}, {0.0}, 0.0, 0.0};
    s.detection = {};
    const long D = lik_.marked_count();
    s.N = priors_.N_mean >= static_cast<double>(D) ? std::lround(priors_.N_mean) : 2 * std::max(D, 1L);
    for (int t = 1; t <= T; ++t)
      if (lik_.design().resight(t)) s.N = std::max(s.N, D + *lik_.data().counts[static_cast<std::size_t>(t - 1)]);
    return s;
  }

  Eval evaluate(const OpenParamState& s) {
    Eval e;
    e.logprior = log_prior(s, priors_);
    if (e.logprior == kNegInf) return e;
    e.parts = lik_.parts(s);
    e.loglik = lik_.total(e.parts, s.N);
    return e;
  }

  /// Re-evaluates at a different N using the N-independent parts of `base`.
  Eval evaluate_N(const Eval& base, const OpenParamState& s) {
    Eval e;
    e.logprior = log_prior(s, priors_);
    if (e.logprior == kNegInf) return e;
    e.parts = base.parts;
    e.loglik = lik_.total(e.parts, s.N);
    return e;
  }

  /// Runs the chain from `init` (or the default start) and returns the retained trace.
  ChainResult<OpenParamState> run(std::optional<OpenParamState> init = std::nullopt) {
    Rng rng(config_.seed);
    state_ = init ? *init : default_init();
    current_ = evaluate(state_);
    if (!std::isfinite(current_.total())) throw ConfigError("initial state has zero posterior density");
    lik_.commit(state_);
    stats_.clear();
    ChainResult<OpenParamState> out;
    StepTuner tuner;
    for (long it = 1; it <= config_.iterations; ++it) {
      iterate(rng, it <= config_.burn_in && config_.adapt ? &tuner : nullptr);
      if (config_.adapt && it <= config_.burn_in && it % config_.tune_batch == 0)
        tuner.end_batch(config_.step_sizes, &config_.gamma_prop);
      if (it % config_.check_every == 0) audit(it);
#ifndef NDEBUG
      state_.validate(lik_.marked_count());
#endif
      if (it > config_.burn_in && (it - config_.burn_in) % config_.thin == 0)
        out.trace.records.push_back({it, state_, current_.loglik, current_.logprior});
    }
    out.stats = stats_;
    out.tuned = config_;
    return out;
  }

  const OpenParamState& state() const { return state_; }
  const Eval& current() const { return current_; }

 private:
  void note(const std::string& move, bool accepted, StepTuner* tuner, const std::string& tune_key) {
    record(stats_, move, accepted);
    if (accepted) lik_.commit(state_);
    if (tuner) tuner->record(tune_key, accepted);
  }

  void iterate(Rng& rng, StepTuner* tuner) {
    auto target = [this](const OpenParamState& s) { return evaluate(s); };
    auto scalar = [&](const std::string& name, auto access) {
      const bool acc = mh_scalar_update(state_, current_, target, access, config_.step(name), rng);
      note(name, acc, tuner, name);
    };

    for (std::size_t m = 0; m < state_.arrival.mu.size(); ++m) {
      scalar("mu", [m](OpenParamState& s) -> double& { return s.arrival.mu[m]; });
      scalar("sigma", [m](OpenParamState& s) -> double& { return s.arrival.sigma[m]; });
    }
    for (std::size_t g = 0; g < state_.behaviour.phi0.size(); ++g)
      scalar("phi0", [g](OpenParamState& s) -> double& { return s.behaviour.phi0[g]; });
    scalar("gamma_t", [](OpenParamState& s) -> double& { return s.behaviour.gamma_t; });
    scalar("gamma_a", [](OpenParamState& s) -> double& { return s.behaviour.gamma_a; });
    scalar("cap0", [](OpenParamState& s) -> double& { return s.detection.cap0; });
    scalar("cap_e", [](OpenParamState& s) -> double& { return s.detection.cap_e; });
    scalar("cap_loc2", [](OpenParamState& s) -> double& { return s.detection.cap_loc2; });
    scalar("cap_loc3", [](OpenParamState& s) -> double& { return s.detection.cap_loc3; });
    scalar("s", [](OpenParamState& s) -> double& { return s.detection.s; });

    {
      const auto base = current_;
      auto target_N = [&](const OpenParamState& s) { return evaluate_N(base, s); };
      const long h = std::max(1L, std::lround(config_.step("N")));
      const bool acc = update_N_walk(state_, current_, target_N, lik_.marked_count(), h, rng);
      note("N", acc, tuner, "N");
    }

    for (int r = 0; r < std::max(1, state_.M() - 1); ++r) {
      const bool acc = proportion_pair_update(
          state_, current_, target, [](OpenParamState& s) -> std::vector<double>& { return s.arrival.w; },
          config_.gamma_prop, rng);
      if (state_.M() > 1) note("w", acc, tuner, "gamma_prop");
    }
    for (int r = 0; r < std::max(1, state_.G() - 1); ++r) {
      const bool acc = proportion_pair_update(
          state_, current_, target, [](OpenParamState& s) -> std::vector<double>& { return s.behaviour.pi; },
          config_.gamma_prop, rng);
      if (state_.G() > 1) note("pi", acc, tuner, "gamma_prop");
    }

    if (config_.m_move_prob > 0.0 && uniform01(rng) < config_.m_move_prob) m_move(rng, target);
    if (config_.g_move_prob > 0.0 && uniform01(rng) < config_.g_move_prob) g_move(rng, target);
  }

  template <class Target>
  void m_move(Rng& rng, Target& target) {
    const int M = state_.M();
    auto props = [](OpenParamState& s) -> std::vector<double>& { return s.arrival.w; };
    const bool birth = uniform01(rng) < m_moves_.up(M);
    if (birth) {
      auto grow = [this](OpenParamState& s, Rng& r) {
        const auto c = sample_arrival_component(priors_, r);
        s.arrival.mu.push_back(c.mu);
        s.arrival.sigma.push_back(c.sigma);
        return arrival_component_logprior(c.mu, c.sigma, priors_);
      };
      note("M_birth", birth_move(state_, current_, target, m_moves_, props, grow, rng), nullptr, {});
    } else {
      auto shrink = [this](OpenParamState& s, std::size_t a) {
        const double lq = arrival_component_logprior(s.arrival.mu[a], s.arrival.sigma[a], priors_);
        const auto off = static_cast<std::ptrdiff_t>(a);
        s.arrival.w.erase(s.arrival.w.begin() + off);
        s.arrival.mu.erase(s.arrival.mu.begin() + off);
        s.arrival.sigma.erase(s.arrival.sigma.begin() + off);
        return lq;
      };
      note("M_death", death_move(state_, current_, target, m_moves_, props, shrink, rng), nullptr, {});
    }
  }

  template <class Target>
  void g_move(Rng& rng, Target& target) {
    const int G = state_.G();
    auto props = [](OpenParamState& s) -> std::vector<double>& { return s.behaviour.pi; };
    const bool birth = uniform01(rng) < g_moves_.up(G);
    if (birth) {
      auto grow = [this](OpenParamState& s, Rng& r) {
        const double phi0 = sample_behaviour_component(priors_, r);
        s.behaviour.phi0.push_back(phi0);
        return behaviour_component_logprior(phi0, priors_);
      };
      note("G_birth", birth_move(state_, current_, target, g_moves_, props, grow, rng), nullptr, {});
    } else {
      auto shrink = [this](OpenParamState& s, std::size_t a) {
        const double lq = behaviour_component_logprior(s.behaviour.phi0[a], priors_);
        const auto off = static_cast<std::ptrdiff_t>(a);
        s.behaviour.pi.erase(s.behaviour.pi.begin() + off);
        s.behaviour.phi0.erase(s.behaviour.phi0.begin() + off);
        return lq;
      };
      note("G_death", death_move(state_, current_, target, g_moves_, props, shrink, rng), nullptr, {});
    }
  }

  void audit(long it) {
    OpenLikelihood fresh(lik_.design(), lik_.data());
    const double ll = fresh(state_);
    const bool both_inf = ll == kNegInf && current_.loglik == kNegInf;
    if (!both_inf && !(std::abs(ll - current_.loglik) <= 1e-8))
      throw NumericError("likelihood cache divergence at iteration " + std::to_string(it));
    state_.validate(lik_.marked_count());
  }

  OpenLikelihood lik_;
  OpenPriors priors_;
  SamplerConfig config_;
  TransitionProbs m_moves_, g_moves_;
  OpenParamState state_;
  Eval current_;
  MoveStats stats_;
};

// --- closed model -------------------------------------------------------------------

class ClosedSampler {
 public:
  struct Eval {
    double loglik = kNegInf;
    double logprior = kNegInf;
    double total() const { return loglik + logprior; }
  };

  ClosedSampler(const ObservedData& data, int T, ClosedPriors priors, SamplerConfig config)
      : lik_(data, T), priors_(priors), config_(std::move(config)) {
    priors_.validate();
    config_.validate();
    g_moves_ = {1, priors_.G_max};
  }

  const ClosedLikelihood& likelihood() const { return lik_; }
  const ClosedPriors& priors() const { return priors_; }

  ClosedParamState default_init() const {
    ClosedParamState s;
    s.pi = {1.0};
    s.p = {0.5};
    s.N = std::clamp(2 * lik_.marked_count(), priors_.N_min, priors_.N_max);
    return s;
  }

  Eval evaluate(const ClosedParamState& s) const {
    Eval e;
    e.logprior = log_prior(s, priors_);
    if (e.logprior == kNegInf) return e;
    e.loglik = lik_(s);
    return e;
  }

  ChainResult<ClosedParamState> run(std::optional<ClosedParamState> init = std::nullopt) {
    Rng rng(config_.seed);
    state_ = init ? *init : default_init();
    current_ = evaluate(state_);
    if (!std::isfinite(current_.total())) throw ConfigError("initial state has zero posterior density");
    stats_.clear();
    ChainResult<ClosedParamState> out;
    StepTuner tuner;
    for (long it = 1; it <= config_.iterations; ++it) {
      iterate(rng, it <= config_.burn_in && config_.adapt ? &tuner : nullptr);
      if (config_.adapt && it <= config_.burn_in && it % config_.tune_batch == 0)
        tuner.end_batch(config_.step_sizes, &config_.gamma_prop);
      if (it % config_.check_every == 0) audit(it);
      if (it > config_.burn_in && (it - config_.burn_in) % config_.thin == 0)
        out.trace.records.push_back({it, state_, current_.loglik, current_.logprior});
    }
    out.stats = stats_;
    out.tuned = config_;
    return out;
  }

  const ClosedParamState& state() const { return state_; }

 private:
  void note(const std::string& move, bool accepted, StepTuner* tuner, const std::string& key) {
    record(stats_, move, accepted);
    if (tuner && !key.empty()) tuner->record(key, accepted);
  }

  void iterate(Rng& rng, StepTuner* tuner) {
    auto target = [this](const ClosedParamState& s) { return evaluate(s); };
    for (std::size_t g = 0; g < state_.p.size(); ++g) {
      const bool acc = mh_scalar_update(state_, current_, target,
                                        [g](ClosedParamState& s) -> double& { return s.p[g]; }, config_.step("p"), rng);
      note("p", acc, tuner, "p");
    }
    bool acc;
    if (config_.n_proposal == NProposal::Poisson) {
      acc = update_N_poisson(state_, current_, target, priors_.N_min, priors_.N_max, rng);
      note("N", acc, tuner, {});
    } else {
      acc = update_N_walk(state_, current_, target, priors_.N_min, std::max(1L, std::lround(config_.step("N"))), rng);
      note("N", acc, tuner, "N");
    }
    for (int r = 0; r < std::max(1, state_.G() - 1); ++r) {
      acc = proportion_pair_update(state_, current_, target,
                                   [](ClosedParamState& s) -> std::vector<double>& { return s.pi; },
                                   config_.gamma_prop, rng);
      if (state_.G() > 1) note("pi", acc, tuner, "gamma_prop");
    }
    if (config_.g_move_prob > 0.0 && uniform01(rng) < config_.g_move_prob) {
      auto props = [](ClosedParamState& s) -> std::vector<double>& { return s.pi; };
      if (uniform01(rng) < g_moves_.up(state_.G())) {
        auto grow = [](ClosedParamState& s, Rng& r) {
          const double p = sample_capture_group(r);
          s.p.push_back(p);
          return capture_group_logprior(p);
        };
        note("G_birth", birth_move(state_, current_, target, g_moves_, props, grow, rng), nullptr, {});
      } else {
        auto shrink = [](ClosedParamState& s, std::size_t a) {
          const double lq = capture_group_logprior(s.p[a]);
          const auto off = static_cast<std::ptrdiff_t>(a);
          s.pi.erase(s.pi.begin() + off);
          s.p.erase(s.p.begin() + off);
          return lq;
        };
        note("G_death", death_move(state_, current_, target, g_moves_, props, shrink, rng), nullptr, {});
      }
    }
  }

  void audit(long it) {
    const double ll = lik_(state_);
    if (!(std::abs(ll - current_.loglik) <= 1e-8) && !(ll == kNegInf && current_.loglik == kNegInf))
      throw NumericError("likelihood cache divergence at iteration " + std::to_string(it));
    state_.validate(lik_.marked_count());
  }

  ClosedLikelihood lik_;
  ClosedPriors priors_;
  SamplerConfig config_;
  TransitionProbs g_moves_;
  ClosedParamState state_;
  Eval current_;
  MoveStats stats_;
};

inline ChainResult<OpenParamState> run_open_chain(const StudyDesign& design, const ObservedData& data,
                                                  const OpenPriors& priors, const SamplerConfig& config,
                                                  std::optional<OpenParamState> init = std::nullopt) {
  OpenSampler sampler(design, data, priors, config);
  return sampler.run(std::move(init));
}

inline ChainResult<ClosedParamState> run_closed_chain(const ObservedData& data, int T, const ClosedPriors& priors,
                                                      const SamplerConfig& config,
                                                      std::optional<ClosedParamState> init = std::nullopt) {
  ClosedSampler sampler(data, T, priors, config);
  return sampler.run(std::move(init));
}

/// Pilot run over the burn-in period with adaptation on; returns the tuned configuration.
inline SamplerConfig tune_open(const StudyDesign& design, const ObservedData& data, const OpenPriors& priors,
                               SamplerConfig config, std::optional<OpenParamState> init = std::nullopt) {
  config.adapt = true;
  config.iterations = config.burn_in + 1;
  auto result = run_open_chain(design, data, priors, config, std::move(init));
  auto tuned = result.tuned;
  return tuned;
}

inline SamplerConfig tune_closed(const ObservedData& data, int T, const ClosedPriors& priors, SamplerConfig config,
                                 std::optional<ClosedParamState> init = std::nullopt) {
  config.adapt = true;
  config.iterations = config.burn_in + 1;
  return run_closed_chain(data, T, priors, config, std::move(init)).tuned;
}

}  // namespace stopover
