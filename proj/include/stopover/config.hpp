#pragma once

// Run configuration: one JSON document, optionally patched by KEY=VALUE
// overrides addressed with dotted paths (e.g. sampler.iterations=5000).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopover/errors.hpp"
#include "stopover/io.hpp"
#include "stopover/oracle.hpp"
#include "stopover/params.hpp"
#include "stopover/priors.hpp"
#include "stopover/sampler.hpp"
#include "stopover/trace.hpp"

namespace stopover {

using Json = nlohmann::json;

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

/// Applies "a.b.c=value"; the value is read as JSON when it parses, else as a string.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &doc;
  for (auto part : io::split(key, '.')) {
    if (part.empty()) throw ConfigError("--set: empty path segment in '" + key + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("--set: '" + key + "' descends into a non-object");
      *node = Json::object();
    }
    node = &(*node)[std::string(part)];
  }
  *node = std::move(value);
}

namespace detail {

template <class T>
T get_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline std::vector<double> get_list(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + ": required");
  try {
    return obj.at(key).get<std::vector<double>>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": expected a list of numbers");
  }
}

inline double get_num(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + ": required");
  if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return obj.at(key).get<double>();
}

}  // namespace detail

// --- states <-> JSON -------------------------------------------------------------------

inline Json to_json(const OpenParamState& s) {
  return Json{{"N", s.N},
              {"w", s.arrival.w},
              {"mu", s.arrival.mu},
              {"sigma", s.arrival.sigma},
              {"pi", s.behaviour.pi},
              {"phi0", s.behaviour.phi0},
              {"gamma_t", s.behaviour.gamma_t},
              {"gamma_a", s.behaviour.gamma_a},
              {"cap0", s.detection.cap0},
              {"cap_e", s.detection.cap_e},
              {"cap_loc2", s.detection.cap_loc2},
              {"cap_loc3", s.detection.cap_loc3},
              {"s", s.detection.s}};
}

inline Json to_json(const ClosedParamState& s) { return Json{{"N", s.N}, {"pi", s.pi}, {"p", s.p}}; }

inline OpenParamState open_state_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  OpenParamState s;
  const double N = detail::get_num(j, "N", where);
  if (N != std::floor(N)) throw ConfigError(where + ".N: must be an integer");
  s.N = static_cast<long>(N);
  s.arrival = {detail::get_list(j, "w", where), detail::get_list(j, "mu", where), detail::get_list(j, "sigma", where)};
  s.behaviour.pi = detail::get_list(j, "pi", where);
  s.behaviour.phi0 = detail::get_list(j, "phi0", where);
  s.behaviour.gamma_t = detail::get_num(j, "gamma_t", where);
  s.behaviour.gamma_a = detail::get_num(j, "gamma_a", where);
  s.detection.cap0 = detail::get_num(j, "cap0", where);
  s.detection.cap_e = detail::get_num(j, "cap_e", where);
  s.detection.cap_loc2 = detail::get_num(j, "cap_loc2", where);
  s.detection.cap_loc3 = detail::get_num(j, "cap_loc3", where);
  s.detection.s = detail::get_num(j, "s", where);
  try {
    s.arrival.validate();
    s.behaviour.validate();
    s.detection.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

inline ClosedParamState closed_state_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  ClosedParamState s;
  const double N = detail::get_num(j, "N", where);
  if (N != std::floor(N)) throw ConfigError(where + ".N: must be an integer");
  s.N = static_cast<long>(N);
  s.pi = detail::get_list(j, "pi", where);
  s.p = detail::get_list(j, "p", where);
  try {
    stopover::detail::check_proportions(s.pi, "pi");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (s.p.size() != s.pi.size()) throw ConfigError(where + ": pi and p lengths differ");
  for (double p : s.p)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(where + ": p outside [0,1]");
  return s;
}

// --- run configuration -----------------------------------------------------------------

/// Which data files a subcommand requires.
enum class DataNeed { None, Design, Full };

struct RunConfig {
  Json doc;  // after overrides; the hash covers this document
  std::string hash;
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::Open;
  std::filesystem::path base_dir;
  std::string design_path, histories_path, counts_path, trace_path;
  std::string out_dir = "out";
  int chains = 1;
  int closed_T = 0;  // closed model without a design file
  SamplerConfig sampler;
  std::optional<Json> init, truth;
  long gof_draws = 100;
  std::optional<int> condition_G;
  int density_day = 1, density_age = 1;
  long oracle_draws = 100000;
  oracle::OracleBudget budget;

  std::string header() const { return "config_hash=" + hash + " seed=" + std::to_string(seed); }

  /// Open-model priors with data-dependent defaults resolved for a T-day study.
  OpenPriors open_priors(int T) const {
    const Json pj = doc.value("priors", Json::object());
    OpenPriors p = OpenPriors::for_days(T);
    const std::string w = "priors";
    p.M_max = detail::get_or(pj, "M_max", p.M_max, w);
    p.G_max = detail::get_or(pj, "G_max", p.G_max, w);
    p.G_poisson_mean = detail::get_or(pj, "G_poisson_mean", p.G_poisson_mean, w);
    p.N_mean = detail::get_or(pj, "N_mean", p.N_mean, w);
    p.N_sd = detail::get_or(pj, "N_sd", p.N_sd, w);
    p.mu_mean = detail::get_or(pj, "mu_mean", p.mu_mean, w);
    p.mu_sd = detail::get_or(pj, "mu_sd", p.mu_sd, w);
    p.sigma_lower = detail::get_or(pj, "sigma_lower", p.sigma_lower, w);
    p.sigma_upper = detail::get_or(pj, "sigma_upper", p.sigma_upper, w);
    p.retention_sd = detail::get_or(pj, "retention_sd", p.retention_sd, w);
    p.capture_sd = detail::get_or(pj, "capture_sd", p.capture_sd, w);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return p;
  }

  /// Closed-model priors; N support defaults to [max(D,1), 10 D].
  ClosedPriors closed_priors(long D) const {
    const Json pj = doc.value("priors", Json::object());
    ClosedPriors p;
    p.G_max = detail::get_or(pj, "G_max", p.G_max, "priors");
    p.N_min = std::max(D, 1L);
    p.N_max = detail::get_or(pj, "N_max", 10 * std::max(D, 1L), "priors");
    if (p.N_max < p.N_min) throw ConfigError("priors.N_max: below the number of marked animals");
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return p;
  }
};

namespace detail {

inline std::string resolve_path(const RunConfig& rc, const Json& obj, const char* key, const std::string& where,
                                bool must_exist) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return {};
  if (!obj.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a path string");
  std::filesystem::path p = obj.at(key).get<std::string>();
  if (p.is_relative()) p = rc.base_dir / p;
  if (must_exist && !std::filesystem::exists(p)) throw ConfigError(where + "." + key + ": no such file " + p.string());
  return p.string();
}

inline SamplerConfig sampler_from_json(const Json& sj, ModelKind model) {
  SamplerConfig c = model == ModelKind::Open ? SamplerConfig::open_defaults() : SamplerConfig::closed_defaults();
  const std::string w = "sampler";
  c.iterations = get_or(sj, "iterations", c.iterations, w);
  c.burn_in = get_or(sj, "burn_in", c.burn_in, w);
  c.thin = get_or(sj, "thin", c.thin, w);
  c.gamma_prop = get_or(sj, "gamma_prop", c.gamma_prop, w);
  c.m_move_prob = get_or(sj, "m_move_prob", c.m_move_prob, w);
  c.g_move_prob = get_or(sj, "g_move_prob", c.g_move_prob, w);
  c.adapt = get_or(sj, "adapt", c.adapt, w);
  c.tune_batch = get_or(sj, "tune_batch", c.tune_batch, w);
  c.check_every = get_or(sj, "check_every", c.check_every, w);
  const auto np = get_or<std::string>(sj, "n_proposal", c.n_proposal == NProposal::Poisson ? "poisson" : "walk", w);
  if (np == "poisson") c.n_proposal = NProposal::Poisson;
  else if (np == "walk") c.n_proposal = NProposal::SymmetricWalk;
  else throw ConfigError("sampler.n_proposal: expected 'walk' or 'poisson'");
  if (c.n_proposal == NProposal::SymmetricWalk && !c.step_sizes.contains("N")) c.step_sizes["N"] = 1.0;
  if (sj.is_object() && sj.contains("step_sizes")) {
    const auto& st = sj.at("step_sizes");
    if (!st.is_object()) throw ConfigError("sampler.step_sizes: expected an object");
    for (const auto& [k, v] : st.items()) {
      if (!c.step_sizes.contains(k)) throw ConfigError("sampler.step_sizes." + k + ": unknown move");
      if (!v.is_number()) throw ConfigError("sampler.step_sizes." + k + ": expected a number");
      c.step_sizes[k] = v.get<double>();
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace detail

/// Builds a run configuration from a parsed document. `seed_flag` overrides "seed".
inline RunConfig make_run_config(Json doc, const std::filesystem::path& base_dir,
                                 const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed_flag,
                                 DataNeed need = DataNeed::Full) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& o : overrides) apply_override(doc, o);
  if (seed_flag) doc["seed"] = *seed_flag;
  RunConfig rc;
  rc.base_dir = base_dir;
  const auto* seed = doc.contains("seed") ? &doc.at("seed") : nullptr;
  if (!seed || !(seed->is_number_unsigned() || (seed->is_number_integer() && seed->get<long long>() >= 0)))
    throw ConfigError("seed: required (non-negative integer, via config or --seed)");
  rc.seed = doc.at("seed").get<std::uint64_t>();

  const auto model = doc.value("model", std::string("open"));
  if (model == "open") rc.model = ModelKind::Open;
  else if (model == "closed") rc.model = ModelKind::Closed;
  else throw ConfigError("model: expected 'open' or 'closed'");

  const Json data = doc.value("data", Json::object());
  rc.design_path = detail::resolve_path(rc, data, "design", "data", true);
  const bool need_data = need == DataNeed::Full;
  rc.histories_path = detail::resolve_path(rc, data, "histories", "data", need_data);
  rc.counts_path = detail::resolve_path(rc, data, "counts", "data", need_data);
  rc.closed_T = detail::get_or(data, "T", 0, "data");
  if (need_data) {
    if (rc.histories_path.empty()) throw ConfigError("data.histories: required");
    if (rc.model == ModelKind::Open) {
      if (rc.design_path.empty()) throw ConfigError("data.design: required for the open model");
      if (rc.counts_path.empty()) throw ConfigError("data.counts: required for the open model");
    } else if (rc.design_path.empty() && rc.closed_T < 1) {
      throw ConfigError("data.design or data.T: required for the closed model");
    }
  } else if (need == DataNeed::Design && rc.design_path.empty() && !(rc.model == ModelKind::Closed && rc.closed_T >= 1)) {
    throw ConfigError("data.design: required");
  }
  rc.trace_path = detail::resolve_path(rc, doc, "trace", "config", false);

  rc.out_dir = doc.value("out", std::string("out"));
  rc.chains = detail::get_or(doc, "chains", 1, "config");
  if (rc.chains < 1) throw ConfigError("chains: must be >= 1");

  rc.sampler = detail::sampler_from_json(doc.value("sampler", Json::object()), rc.model);
  rc.sampler.seed = rc.seed;
  if (doc.contains("init")) rc.init = doc.at("init");
  if (doc.contains("truth")) rc.truth = doc.at("truth");

  const Json gof = doc.value("gof", Json::object());
  rc.gof_draws = detail::get_or(gof, "draws", rc.gof_draws, "gof");
  if (rc.gof_draws < 1) throw ConfigError("gof.draws: must be >= 1");
  if (gof.contains("G")) rc.condition_G = detail::get_or(gof, "G", 1, "gof");
  const Json diag = doc.value("diagnose", Json::object());
  rc.density_day = detail::get_or(diag, "day", rc.density_day, "diagnose");
  rc.density_age = detail::get_or(diag, "age", rc.density_age, "diagnose");
  if (diag.contains("G")) rc.condition_G = detail::get_or(diag, "G", 1, "diagnose");
  if (rc.density_day < 1 || rc.density_age < 1) throw ConfigError("diagnose.day/age: must be >= 1");

  const Json orc = doc.value("oracle", Json::object());
  rc.oracle_draws = detail::get_or(orc, "draws", rc.oracle_draws, "oracle");
  rc.budget.max_T = detail::get_or(orc, "max_T", rc.budget.max_T, "oracle");
  rc.budget.max_N = detail::get_or(orc, "max_N", rc.budget.max_N, "oracle");
  rc.budget.max_components = detail::get_or(orc, "max_components", rc.budget.max_components, "oracle");
  rc.budget.max_draws = detail::get_or(orc, "max_draws", rc.budget.max_draws, "oracle");
  if (rc.oracle_draws < 1) throw ConfigError("oracle.draws: must be >= 1");

  // The output directory is not part of the run's identity.
  Json identity = doc;
  identity.erase("out");
  rc.hash = fnv1a_hex(identity.dump());
  rc.doc = std::move(doc);
  return rc;
}

/// Reads the config file (or an empty document when path is empty) and applies overrides.
inline RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides,
                                 std::optional<std::uint64_t> seed_flag, DataNeed need = DataNeed::Full) {
  Json doc = Json::object();
  std::filesystem::path base = std::filesystem::current_path();
  if (!path.empty()) {
    std::string text;
    try {
      text = io::read_file(path);
    } catch (const DataError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config: " + path + " is not valid JSON");
    base = std::filesystem::absolute(path).parent_path();
  }
  return make_run_config(std::move(doc), base, overrides, seed_flag, need);
}

}  // namespace stopover
