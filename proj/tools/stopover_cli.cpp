// stopover: fit, simulate, check and validate stopover models from the command line.
//
// Exit codes: 0 ok, 2 configuration, 3 data, 4 numeric or internal failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stopover/config.hpp"
#include "stopover/stopover.hpp"

namespace fs = std::filesystem;
using namespace stopover;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int chains = 0;
  std::vector<std::string> sets;
  std::string trace;
};

RunConfig configure(const Options& o, DataNeed need) {
  auto sets = o.sets;
  if (!o.out.empty()) sets.push_back("out=" + Json(o.out).dump());
  if (o.chains > 0) sets.push_back("chains=" + std::to_string(o.chains));
  if (!o.trace.empty()) sets.push_back("trace=" + Json(fs::absolute(o.trace).string()).dump());
  return load_run_config(o.config, sets, o.seed, need);
}

/// Writes files into the output directory, each stamped with the run header.
class Outputs {
 public:
  explicit Outputs(const RunConfig& rc) : dir_(rc.out_dir), header_(rc.header()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("out: cannot create " + dir_.string() + ": " + ec.message());
  }

  const std::string& header() const { return header_; }

  void csv(const std::string& name, const std::string& body) const { write(name, "# " + header_ + "\n" + body); }

  void raw(const std::string& name, const std::string& text) const { write(name, text); }

  void json(const std::string& name, Json j) const {
    j["comment"] = header_;
    write(name, j.dump(2) + "\n");
  }

 private:
  void write(const std::string& name, const std::string& text) const {
    try {
      io::write_file((dir_ / name).string(), text);
    } catch (const DataError& e) {
      throw ConfigError(std::string("out: ") + e.what());
    }
  }

  fs::path dir_;
  std::string header_;
};

// --- data loading ---------------------------------------------------------------------

struct Loaded {
  StudyDesign design;
  ObservedData data;
};

StudyDesign design_of(const RunConfig& rc) {
  if (!rc.design_path.empty()) return load_design(rc.design_path);
  if (rc.model == ModelKind::Closed && rc.closed_T >= 1) return StudyDesign::all_capture(rc.closed_T);
  throw ConfigError("data.design: required");
}

void require_closed_design(const StudyDesign& d) {
  for (int t = 1; t <= d.T(); ++t)
    if (!d.capture(t)) throw DataError("closed model: day " + std::to_string(t) + " is not a capture day");
}

Loaded load_data(const RunConfig& rc) {
  Loaded l{design_of(rc), {}};
  if (rc.histories_path.empty()) throw ConfigError("data.histories: required");
  if (rc.model == ModelKind::Closed) {
    require_closed_design(l.design);
    l.data = load_observations(l.design, rc.histories_path, "");
  } else {
    if (rc.counts_path.empty()) throw ConfigError("data.counts: required for the open model");
    l.data = load_observations(l.design, rc.histories_path, rc.counts_path);
  }
  return l;
}

/// "truth" may be an object or the path of a truth JSON written by `simulate`.
std::optional<Json> resolve_truth(const RunConfig& rc) {
  if (!rc.truth) return std::nullopt;
  if (!rc.truth->is_string()) return *rc.truth;
  fs::path p = rc.truth->get<std::string>();
  if (p.is_relative()) p = rc.base_dir / p;
  if (!fs::exists(p)) throw ConfigError("truth: no such file " + p.string());
  const Json j = Json::parse(io::read_file(p.string()), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("truth")) throw ConfigError("truth: " + p.string() + " is not a truth file");
  return j.at("truth");
}

std::vector<std::string> day_columns(const std::vector<int>& days) {
  std::vector<std::string> out;
  for (int t : days) out.push_back("day" + std::to_string(t));
  return out;
}

std::string join(const std::vector<std::string>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + v[i];
  return out;
}

// --- shared report tables -------------------------------------------------------------

template <class State>
std::pair<int, int> modal_model(const ChainTrace<State>& trace) {
  std::pair<int, int> best{1, 1};
  double p = -1.0;
  for (const auto& [k, v] : model_probabilities(trace))
    if (v > p) {
      p = v;
      best = k;
    }
  return best;
}

template <class State>
int modal_G(const ChainTrace<State>& trace) {
  int best = 1;
  double p = -1.0;
  for (const auto& [g, v] : g_probabilities(trace))
    if (v > p) {
      p = v;
      best = g;
    }
  return best;
}

template <class State>
std::string model_probs_csv(const ChainTrace<State>& trace) {
  std::ostringstream out;
  out << "M,G,probability\n";
  for (const auto& [k, p] : model_probabilities(trace)) out << k.first << ',' << k.second << ',' << io::format_double(p) << '\n';
  return out.str();
}

void summary_row(std::ostringstream& out, const std::string& q, const std::string& cond, const PosteriorSummary& s) {
  out << q << ',' << cond << ',' << s.n << ',' << io::format_double(s.mean) << ',' << io::format_double(s.sd) << ','
      << io::format_double(s.median) << ',' << io::format_double(s.lower) << ',' << io::format_double(s.upper) << '\n';
}

/// Scalars over the whole trace; component quantities conditional on the modal (M, G).
template <class State>
std::string summary_csv(const ChainTrace<State>& trace, ModelKind kind) {
  std::ostringstream out;
  out << "quantity,condition,n,mean,sd,median,lower95,upper95\n";
  for (const auto& q : scalar_quantities(kind)) summary_row(out, q, "all", conditional_summary(trace, {}, q));
  const auto [M, G] = modal_model(trace);
  ModelCondition cond{M, G};
  if (kind == ModelKind::Closed) cond.M.reset();
  const std::string label = kind == ModelKind::Closed ? "G=" + std::to_string(G)
                                                      : "M=" + std::to_string(M) + ";G=" + std::to_string(G);
  for (const auto& q : component_quantities(kind, M, G)) summary_row(out, q, label, conditional_summary(trace, cond, q));
  return out.str();
}

std::string entry_csv(const OpenTrace& trace, int T) {
  std::ostringstream out;
  out << "day,mean,sd,median,lower95,upper95\n";
  const auto rows = model_averaged_entry(trace, T);
  for (std::size_t t = 0; t < rows.size(); ++t)
    out << t + 1 << ',' << io::format_double(rows[t].mean) << ',' << io::format_double(rows[t].sd) << ','
        << io::format_double(rows[t].median) << ',' << io::format_double(rows[t].lower) << ','
        << io::format_double(rows[t].upper) << '\n';
  return out.str();
}

Json acceptance_json(const MoveStats& stats, const SamplerConfig& tuned) {
  Json moves = Json::object();
  for (const auto& [name, c] : stats) moves[name] = {{"proposed", c.proposed}, {"accepted", c.accepted}, {"rate", c.rate()}};
  return {{"moves", moves}, {"tuned_step_sizes", tuned.step_sizes}, {"tuned_gamma_prop", tuned.gamma_prop}};
}

Json sampler_json(const SamplerConfig& c) {
  return {{"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"gamma_prop", c.gamma_prop},
          {"step_sizes", c.step_sizes},
          {"n_proposal", c.n_proposal == NProposal::Poisson ? "poisson" : "walk"},
          {"m_move_prob", c.m_move_prob},
          {"g_move_prob", c.g_move_prob},
          {"adapt", c.adapt},
          {"tune_batch", c.tune_batch},
          {"check_every", c.check_every}};
}

Json priors_json(const OpenPriors& p) {
  return {{"M_max", p.M_max},         {"G_max", p.G_max},         {"G_poisson_mean", p.G_poisson_mean},
          {"N_mean", p.N_mean},       {"N_sd", p.N_sd},           {"mu_mean", p.mu_mean},
          {"mu_sd", p.mu_sd},         {"sigma_lower", p.sigma_lower}, {"sigma_upper", p.sigma_upper},
          {"retention_sd", p.retention_sd}, {"capture_sd", p.capture_sd}};
}

Json priors_json(const ClosedPriors& p) { return {{"G_max", p.G_max}, {"N_min", p.N_min}, {"N_max", p.N_max}}; }

Json decisions_json() {
  return {{"label_sorting", "arrival components by mu, behavioural groups by phi0, closed groups by p; reporting only"},
          {"model_averaging", "entry curves pooled over every retained state (all M and G)"},
          {"component_summaries", "conditional on the modal (M, G)"},
          {"geweke_variance", "batch means, floor(sqrt(n)) batches; windows first 10% and last 50%"},
          {"observed_duration", "animals captured at least once"},
          {"credible_intervals", "equal-tailed 95%, type-7 quantiles"}};
}

std::string chain_name(const std::string& stem, int c, int chains, const std::string& ext) {
  return chains > 1 ? stem + "_chain" + std::to_string(c + 1) + ext : stem + ext;
}

/// Runs `chains` chains on their own threads; chain c uses derive_seed(seed, c) when chains > 1.
template <class Result, class Run>
std::vector<Result> run_chains(const RunConfig& rc, Run run) {
  std::vector<Result> results(static_cast<std::size_t>(rc.chains));
  std::vector<std::exception_ptr> errors(results.size());
  auto body = [&](std::size_t c) {
    try {
      SamplerConfig cfg = rc.sampler;
      cfg.seed = rc.chains > 1 ? derive_seed(rc.seed, c) : rc.seed;
      results[c] = run(cfg);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (rc.chains == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t c = 0; c < results.size(); ++c) threads.emplace_back(body, c);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// --- subcommands ------------------------------------------------------------------------

int cmd_fit(const Options& o) {
  const auto rc = configure(o, DataNeed::Full);
  const auto l = load_data(rc);
  const Outputs out(rc);
  const auto truth = resolve_truth(rc);
  Json config = rc.doc;
  config.erase("out");  // keeps metadata identical across output directories
  Json meta = {{"config", config},     {"config_hash", rc.hash},  {"seed", rc.seed},
               {"model", to_string(rc.model)}, {"T", l.design.T()}, {"marked", l.data.marked()},
               {"chains", rc.chains},  {"decisions", decisions_json()}};
  if (truth) meta["truth"] = *truth;

  if (rc.model == ModelKind::Open) {
    const auto priors = rc.open_priors(l.design.T());
    std::optional<OpenParamState> init;
    if (rc.init) init = open_state_from_json(*rc.init, "init");
    const auto results = run_chains<ChainResult<OpenParamState>>(
        rc, [&](const SamplerConfig& cfg) { return run_open_chain(l.design, l.data, priors, cfg, init); });
    for (int c = 0; c < rc.chains; ++c) {
      const auto& r = results[static_cast<std::size_t>(c)];
      out.raw(chain_name("trace", c, rc.chains, ".csv"), trace_csv(r.trace, out.header()));
      out.json(chain_name("acceptance", c, rc.chains, ".json"), acceptance_json(r.stats, r.tuned));
      out.csv(chain_name("model_probs", c, rc.chains, ".csv"), model_probs_csv(r.trace));
      out.csv(chain_name("summary", c, rc.chains, ".csv"), summary_csv(r.trace, ModelKind::Open));
      out.csv(chain_name("entry", c, rc.chains, ".csv"), entry_csv(r.trace, l.design.T()));
    }
    meta["priors"] = priors_json(priors);
    meta["sampler"] = sampler_json(rc.sampler);
  } else {
    const auto priors = rc.closed_priors(l.data.marked());
    std::optional<ClosedParamState> init;
    if (rc.init) init = closed_state_from_json(*rc.init, "init");
    const auto results = run_chains<ChainResult<ClosedParamState>>(
        rc, [&](const SamplerConfig& cfg) { return run_closed_chain(l.data, l.design.T(), priors, cfg, init); });
    for (int c = 0; c < rc.chains; ++c) {
      const auto& r = results[static_cast<std::size_t>(c)];
      out.raw(chain_name("trace", c, rc.chains, ".csv"), trace_csv(r.trace, out.header()));
      out.json(chain_name("acceptance", c, rc.chains, ".json"), acceptance_json(r.stats, r.tuned));
      out.csv(chain_name("model_probs", c, rc.chains, ".csv"), model_probs_csv(r.trace));
      out.csv(chain_name("summary", c, rc.chains, ".csv"), summary_csv(r.trace, ModelKind::Closed));
    }
    meta["priors"] = priors_json(priors);
    meta["sampler"] = sampler_json(rc.sampler);
  }
  out.json("metadata.json", meta);
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto rc = configure(o, DataNeed::Design);
  const auto truth = resolve_truth(rc);
  if (!truth) throw ConfigError("truth: required for simulate");
  const auto design = design_of(rc);
  const Outputs out(rc);
  Rng rng(rc.seed);
  ObservedData data;
  Json t;
  if (rc.model == ModelKind::Open) {
    const auto state = open_state_from_json(*truth, "truth");
    if (state.N < 1) throw ConfigError("truth.N: must be at least 1");
    data = simulate_dataset(state, design, rng, false).data;
    t = to_json(state);
    out.csv("counts.csv", serialize_counts(data));
  } else {
    require_closed_design(design);
    const auto state = closed_state_from_json(*truth, "truth");
    if (state.N < 1) throw ConfigError("truth.N: must be at least 1");
    data = simulate_closed(state, design.T(), rng);
    t = to_json(state);
  }
  out.csv("design.csv", serialize_design(design));
  out.csv("histories.csv", serialize_histories(data));
  out.json("truth.json", {{"model", to_string(rc.model)}, {"truth", t}, {"marked", data.marked()}});
  return 0;
}

OpenTrace read_open_trace(const RunConfig& rc) {
  if (rc.trace_path.empty()) throw ConfigError("trace: required (config key or --trace)");
  auto in = io::open_input(rc.trace_path);
  return parse_open_trace(in);
}

int cmd_gof(const Options& o) {
  const auto rc = configure(o, DataNeed::Full);
  if (rc.model != ModelKind::Open) throw ConfigError("model: gof applies to the open model");
  const auto l = load_data(rc);
  const auto trace = read_open_trace(rc);
  if (trace.empty()) throw DataError("trace: no retained states");
  const Outputs out(rc);

  Rng r1(derive_seed(rc.seed, 1)), r2(derive_seed(rc.seed, 2)), r3(derive_seed(rc.seed, 3));
  const auto ll = gof_loglik_density(trace, l.data, l.design, rc.gof_draws, r1);
  std::ostringstream a;
  a << "iteration,real,simulated\n";
  std::vector<double> real, sim;
  for (const auto& r : ll) {
    a << r.iteration << ',' << io::format_double(r.real) << ',' << io::format_double(r.simulated) << '\n';
    real.push_back(r.real);
    sim.push_back(r.simulated);
  }
  out.csv("gof_loglik.csv", a.str());

  const auto st = gof_occasion_stats(trace, l.data, l.design, rc.gof_draws, r2);
  auto wide = [&](const std::vector<int>& days, const std::vector<std::vector<long>>& rows) {
    std::ostringstream s;
    s << "iteration" << (days.empty() ? "" : ",") << join(day_columns(days)) << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
      s << st.iterations[i];
      for (long v : rows[i]) s << ',' << v;
      s << '\n';
    }
    return s.str();
  };
  out.csv("gof_first_caught.csv", wide(st.capture_days, st.first_caught));
  out.csv("gof_unmarked.csv", wide(st.resight_days, st.unmarked));
  std::ostringstream obs;
  obs << "statistic,day,count\n";
  for (std::size_t j = 0; j < st.capture_days.size(); ++j)
    obs << "first_caught," << st.capture_days[j] << ',' << st.real_first_caught[j] << '\n';
  for (std::size_t j = 0; j < st.resight_days.size(); ++j)
    obs << "unmarked," << st.resight_days[j] << ',' << st.real_unmarked[j] << '\n';
  out.csv("gof_observed.csv", obs.str());

  const int G = rc.condition_G.value_or(modal_G(trace));
  std::ostringstream d;
  d << "iteration,group,detected,mean,sd\n";
  for (const auto& r : observed_stopover_durations(trace, l.design, rc.gof_draws, r3, G))
    d << r.iteration << ',' << r.group << ',' << r.detected << ',' << io::format_double(r.mean) << ','
      << io::format_double(r.sd) << '\n';
  out.csv("durations.csv", d.str());

  Json summary = {{"draws", rc.gof_draws}, {"occasion_coverage", occasion_coverage(st)}, {"durations_G", G},
                  {"observed_duration", "animals captured at least once"}};
  if (real.size() >= 2) {
    const auto sr = summarize(real), ss = summarize(sim);
    const double pooled = std::sqrt((sr.sd * sr.sd + ss.sd * ss.sd) / 2.0);
    const double mr = kde_mode(real), ms = kde_mode(sim);
    summary["mode_real"] = mr;
    summary["mode_simulated"] = ms;
    summary["pooled_sd"] = pooled;
    summary["mode_difference_over_sd"] = pooled > 0.0 ? std::abs(mr - ms) / pooled : 0.0;
  }
  out.json("gof_summary.json", summary);
  return 0;
}

std::string geweke_csv(const std::vector<std::pair<std::string, std::vector<double>>>& series_list) {
  std::ostringstream out;
  out << "quantity,n,z,status\n";
  for (const auto& [q, v] : series_list) {
    out << q << ',' << v.size() << ',';
    if (v.size() < 100) {
      out << ",short\n";
      continue;
    }
    const auto z = geweke_z(v);
    if (z) out << io::format_double(*z) << ",ok\n";
    else out << ",degenerate\n";
  }
  return out.str();
}

template <class State>
std::vector<std::pair<std::string, std::vector<double>>> diagnostic_series(const ChainTrace<State>& trace,
                                                                           ModelKind kind) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (const auto& q : scalar_quantities(kind)) out.emplace_back(q, series(trace, q));
  out.emplace_back("loglik", series(trace, "loglik"));
  out.emplace_back("logprior", series(trace, "logprior"));
  return out;
}

int cmd_diagnose(const Options& o) {
  const auto rc = configure(o, DataNeed::None);
  if (rc.trace_path.empty()) throw ConfigError("trace: required (config key or --trace)");
  ModelKind kind;
  {
    auto in = io::open_input(rc.trace_path);
    kind = trace_kind(in);
  }
  const Outputs out(rc);
  Json meta = {{"trace", rc.trace_path}, {"model", to_string(kind)}, {"decisions", decisions_json()}};
  auto in = io::open_input(rc.trace_path);
  if (kind == ModelKind::Open) {
    const auto trace = parse_open_trace(in);
    if (trace.empty()) throw DataError("trace: no retained states");
    out.csv("geweke.csv", geweke_csv(diagnostic_series(trace, kind)));
    out.csv("model_probs.csv", model_probs_csv(trace));
    out.csv("summary.csv", summary_csv(trace, kind));
    if (!rc.design_path.empty()) out.csv("entry.csv", entry_csv(trace, load_design(rc.design_path).T()));
    const int G = rc.condition_G.value_or(modal_G(trace));
    std::ostringstream d;
    d << "iteration,group,phi,pi\n";
    for (const auto& r : retention_group_density(trace, rc.density_day, rc.density_age, G))
      d << r.iteration << ',' << r.group << ',' << io::format_double(r.phi) << ',' << io::format_double(r.pi) << '\n';
    out.csv("retention_density.csv", d.str());
    meta["retention_density"] = {{"day", rc.density_day}, {"age", rc.density_age}, {"G", G}};
  } else {
    const auto trace = parse_closed_trace(in);
    if (trace.empty()) throw DataError("trace: no retained states");
    out.csv("geweke.csv", geweke_csv(diagnostic_series(trace, kind)));
    out.csv("model_probs.csv", model_probs_csv(trace));
    out.csv("summary.csv", summary_csv(trace, kind));
  }
  out.json("diagnose.json", meta);
  return 0;
}

int cmd_oracle(const Options& o) {
  const auto rc = configure(o, DataNeed::Design);
  const auto design = design_of(rc);
  rc.budget.check_T(design.T());
  if (rc.histories_path.empty()) throw ConfigError("data.histories: required");
  Rng rng(rc.seed);

  if (rc.model == ModelKind::Closed) {
    require_closed_design(design);
    const auto data = load_observations(design, rc.histories_path, "");
    const auto priors = rc.closed_priors(data.marked());
    const auto res = oracle::rejection_posterior(data, design.T(), priors, rc.oracle_draws, rc.budget, rng);
    const Outputs out(rc);
    const auto trace = oracle::as_trace(res, data, design.T(), priors);
    out.raw("oracle_trace.csv", trace_csv(trace, out.header()));
    out.csv("model_probs.csv", model_probs_csv(trace));
    out.json("oracle.json", {{"method", "rejection from the prior"},
                             {"proposed", res.proposed},
                             {"accepted", res.accepted},
                             {"acceptance_rate", res.acceptance_rate()},
                             {"log_L_max", res.log_L_max},
                             {"priors", priors_json(priors)}});
    return 0;
  }

  const auto truth = rc.truth ? resolve_truth(rc) : rc.init;
  if (!truth) throw ConfigError("truth or init: a parameter state is required for the open-model oracle");
  const auto state = open_state_from_json(*truth, rc.truth ? "truth" : "init");
  rc.budget.check_N(state.N);
  rc.budget.check_components(std::max(state.M(), state.G()));
  if (rc.counts_path.empty()) throw ConfigError("data.counts: required for the open model");
  const auto data = load_observations(design, rc.histories_path, rc.counts_path);
  const Outputs out(rc);
  const auto beta = entry_probabilities(state.arrival, design.T());
  std::ostringstream s;
  s << "term,brute,fast,rel_diff\n";
  double worst = 0.0;
  auto row = [&](const std::string& term, double brute, double fast) {
    const double rel = brute == fast ? 0.0 : std::abs(brute - fast) / std::max(std::abs(brute), 1e-300);
    worst = std::max(worst, rel);
    s << term << ',' << io::format_double(brute) << ',' << io::format_double(fast) << ',' << io::format_double(rel) << '\n';
  };
  for (const auto& h : data.histories)
    row("history:" + h, oracle::brute_history_loglik(state, design, h, rc.budget),
        history_loglik(state, beta, design, h, bounds_of(h)));
  row("zero", oracle::brute_zero_loglik(state, design, rc.budget), zero_history_loglik(state, beta, design));
  for (int t = 1; t <= design.T(); ++t)
    if (design.resight(t))
      row("zeta:" + std::to_string(t), oracle::brute_zeta(state, design, t, rc.budget),
          count_success_prob(state, beta, design, t));
  row("loglik", oracle::brute_open_loglik(state, design, data, rc.budget), open_log_likelihood(state, data, design));
  out.csv("oracle_audit.csv", s.str());
  out.json("oracle.json", {{"method", "brute-force enumeration of latent histories"}, {"max_rel_diff", worst}});
  return 0;
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "stopover: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trans-dimensional MCMC for stopover models"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON)");
    sub->add_option("--seed", o.seed, "Random seed (overrides the config)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--chains", o.chains, "Independent chains to run")->check(CLI::PositiveNumber);
    sub->add_option("--set", o.sets, "Override a config value, KEY=VALUE with dotted keys");
  };
  auto* fit = app.add_subcommand("fit", "Run the reversible-jump sampler");
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from known parameters");
  auto* gof = app.add_subcommand("gof", "Posterior predictive checks on a trace");
  auto* diagnose = app.add_subcommand("diagnose", "Convergence diagnostics and summaries of a trace");
  auto* orc = app.add_subcommand("oracle", "Independent reference computations for small instances");
  for (auto* sub : {fit, simulate, gof, diagnose, orc}) common(sub);
  for (auto* sub : {gof, diagnose}) sub->add_option("--trace", o.trace, "Trace CSV (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*simulate) return cmd_simulate(o);
    if (*gof) return cmd_gof(o);
    if (*diagnose) return cmd_diagnose(o);
    if (*orc) return cmd_oracle(o);
  } catch (const ConfigError& e) {
    return report(dynamic_cast<const BudgetError*>(&e) ? "budget error" : "config error", e, 2);
  } catch (const Json::exception& e) {
    return report("config error", e, 2);
  } catch (const DataError& e) {
    return report("data error", e, 3);
  } catch (const NumericError& e) {
    return report("numeric error", e, 4);
  } catch (const std::invalid_argument& e) {
    return report("invalid value", e, 2);
  } catch (const std::exception& e) {
    return report("internal error", e, 4);
  }
  return 4;
}
