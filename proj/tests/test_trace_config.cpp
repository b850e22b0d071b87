#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "stopover/config.hpp"
#include "test_support.hpp"

using namespace stopover;
namespace fs = std::filesystem;

TEST(Trace, OpenRoundTripIsExact) {
  Rng rng(21);
  OpenTrace t;
  for (int i = 0; i < 50; ++i) t.records.push_back({2 * i + 1, testing_support::random_state(rng, 10), -1.0 / 3, 0.1 * i});
  std::istringstream in(trace_csv(t, "config_hash=abc seed=1"));
  const auto back = parse_open_trace(in);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto &a = t.records[i], &b = back.records[i];
    EXPECT_EQ(a.iteration, b.iteration);
    EXPECT_EQ(a.state.arrival.mu, b.state.arrival.mu);
    EXPECT_EQ(a.state.behaviour.pi, b.state.behaviour.pi);
    EXPECT_EQ(a.state.detection.s, b.state.detection.s);
    EXPECT_EQ(a.state.N, b.state.N);
    EXPECT_EQ(a.loglik, b.loglik);
  }
  EXPECT_EQ(trace_csv(back, "config_hash=abc seed=1"), trace_csv(t, "config_hash=abc seed=1"));
}

TEST(Trace, ClosedRoundTripAndKind) {
  ClosedTrace t;
  ClosedParamState s;
  s.N = 7;
  s.pi = {0.25, 0.75};
  s.p = {0.1, 0.9};
  t.records.push_back({1, s, -2.5, -1.0});
  const auto text = trace_csv(t, "x");
  std::istringstream k(text), in(text);
  EXPECT_EQ(trace_kind(k), ModelKind::Closed);
  const auto back = parse_closed_trace(in);
  EXPECT_EQ(back.records[0].state.p, t.records[0].state.p);
  std::istringstream bad("iteration,G,N,pi,p,loglik,logprior\n1,2,5,0.5,0.5,0,0\n");
  EXPECT_THROW(parse_closed_trace(bad), DataError);
}

TEST(Config, OverridesAndHash) {
  Json doc = {{"seed", 3}, {"sampler", {{"iterations", 10}}}};
  Json a = doc;
  apply_override(a, "sampler.iterations=20");
  apply_override(a, "out=results");
  apply_override(a, "priors.N_mean=500.5");
  EXPECT_EQ(a["sampler"]["iterations"], 20);
  EXPECT_EQ(a["out"], "results");
  EXPECT_EQ(a["priors"]["N_mean"], 500.5);
  EXPECT_THROW(apply_override(a, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(a, "out.x=1"), ConfigError);
  EXPECT_NE(fnv1a_hex(a.dump()), fnv1a_hex(doc.dump()));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("stopover_cfg_" + name);
  fs::create_directories(dir);
  io::write_file((dir / "design.csv").string(), "day,type,effort,location\n1,C,1,1\n2,R,,\n3,C,2,2\n");
  io::write_file((dir / "histories.csv").string(), "history,count\n120,2\n101,1\n");
  io::write_file((dir / "counts.csv").string(), "day,count\n1,\n2,4\n3,\n");
  return dir;
}

}  // namespace

TEST(Config, MissingCountsNamesTheField) {
  const auto dir = scratch("missing");
  Json doc = {{"seed", 1}, {"model", "open"}, {"data", {{"design", "design.csv"}, {"histories", "histories.csv"}}}};
  try {
    make_run_config(doc, dir, {}, std::nullopt);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("data.counts"), std::string::npos);
  }
  doc["data"]["counts"] = "nope.csv";
  EXPECT_THROW(make_run_config(doc, dir, {}, std::nullopt), ConfigError);
  doc["data"]["counts"] = "counts.csv";
  const auto rc = make_run_config(doc, dir, {}, std::nullopt);
  const auto design = load_design(rc.design_path);
  const auto data = load_observations(design, rc.histories_path, rc.counts_path);
  EXPECT_EQ(data.marked(), 3);
  EXPECT_EQ(*data.counts[1], 4);
}

TEST(Config, SeedRequiredAndFlagWins) {
  const auto dir = scratch("seed");
  Json doc = {{"data", {{"design", "design.csv"}}}};
  EXPECT_THROW(make_run_config(doc, dir, {}, std::nullopt, DataNeed::Design), ConfigError);
  const auto rc = make_run_config(doc, dir, {"seed=4"}, 9, DataNeed::Design);
  EXPECT_EQ(rc.seed, 9u);
  EXPECT_NE(rc.header().find("seed=9"), std::string::npos);
  EXPECT_THROW(make_run_config(doc, dir, {"sampler.n_proposal=\"jump\""}, 1, DataNeed::Design), ConfigError);
  EXPECT_THROW(make_run_config(doc, dir, {"sampler.step_sizes.bogus=1"}, 1, DataNeed::Design), ConfigError);
  EXPECT_THROW(make_run_config(doc, dir, {"sampler.burn_in=-1"}, 1, DataNeed::Design), ConfigError);
}

TEST(Config, StateJsonRoundTrip) {
  Rng rng(5);
  const auto s = testing_support::random_state(rng, 12);
  const auto back = open_state_from_json(Json::parse(to_json(s).dump()), "truth");
  EXPECT_EQ(back.arrival.w, s.arrival.w);
  EXPECT_EQ(back.behaviour.phi0, s.behaviour.phi0);
  EXPECT_EQ(back.detection.cap_loc3, s.detection.cap_loc3);
  auto j = to_json(s);
  j.erase("s");
  EXPECT_THROW(open_state_from_json(j, "truth"), ConfigError);
  EXPECT_THROW(closed_state_from_json(Json{{"N", 3}, {"pi", {0.5, 0.5}}, {"p", {0.5}}}, "init"), ConfigError);
}
