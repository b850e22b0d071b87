#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "stopover/open_model.hpp"
#include "stopover/oracle.hpp"
#include "test_support.hpp"

using namespace stopover;

namespace {

OpenParamState simple_state(int M = 1, int G = 1) {
  OpenParamState s;
  for (int m = 0; m < M; ++m) {
    s.arrival.w.push_back(1.0 / M);
    s.arrival.mu.push_back(2.0 + 3.0 * m);
    s.arrival.sigma.push_back(1.5);
  }
  for (int g = 0; g < G; ++g) {
    s.behaviour.pi.push_back(1.0 / G);
    s.behaviour.phi0.push_back(-1.0 + 2.0 * g);
  }
  s.behaviour.gamma_t = -0.05;
  s.behaviour.gamma_a = 0.1;
  s.detection = {-0.5, 0.1, 0.3, -0.2, 0.4};
  s.N = 5;
  return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(EntryProbabilities, FarEarlyArrivalFillsTheFirstCell) {
  ArrivalMixture a{{1.0}, {-100.0}, {1.0}};
  const auto beta = entry_probabilities(a, 38);
  EXPECT_NEAR(beta[0], 1.0, 1e-15);
  for (std::size_t b = 1; b < beta.size(); ++b) EXPECT_NEAR(beta[b], 0.0, 1e-15);
}

TEST(EntryProbabilities, SumToOneAndNonNegative) {
  Rng rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const int T = static_cast<int>(uniform_int(rng, 2, 40));
    const auto s = testing_support::random_state(rng, T);
    const auto beta = entry_probabilities(s.arrival, T);
    double sum = 0.0;
    for (double b : beta) {
      ASSERT_GE(b, 0.0);
      sum += b;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_THROW(entry_probabilities(ArrivalMixture{{1.0}, {0.0}, {1.0}}, 1), std::invalid_argument);
}

TEST(EntryProbabilities, MatchQuadratureOfTheMixtureDensity) {
  const ArrivalMixture a{{0.4, 0.6}, {5.0, 15.0}, {2.0, 3.0}};
  const int T = 20;
  const auto beta = entry_probabilities(a, T);
  auto density = [&](double x) {
    double f = 0.0;
    for (std::size_t m = 0; m < 2; ++m) {
      const double z = (x - a.mu[m]) / a.sigma[m];
      f += a.w[m] * std::exp(-0.5 * z * z) / (a.sigma[m] * std::sqrt(2.0 * std::numbers::pi));
    }
    return f;
  };
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  for (int b = 1; b <= T; ++b) {
    const double lo = b == 1 ? -inf : b - 1.0;
    const double hi = b == T ? inf : static_cast<double>(b);
    const double ref = gauss_kronrod<double, 61>::integrate(density, lo, hi, 15, 1e-14);
    EXPECT_NEAR(beta[static_cast<std::size_t>(b - 1)], ref, 1e-8) << "day " << b;
  }
}

TEST(LinkFunctions, RetentionAndCapture) {
  BehaviourModel beh{{1.0}, {0.0}, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(retention_probability(beh, 0, 7, 3), 0.5);
  beh.phi0 = {1.0};
  EXPECT_NEAR(retention_probability(beh, 0, 1, 1), 0.7310585786300049, 1e-15);
  beh = {{1.0}, {0.5}, -0.633, 0.0};
  EXPECT_LT(retention_probability(beh, 0, 20, 2), retention_probability(beh, 0, 10, 2));
  EXPECT_THROW(retention_probability(beh, 1, 1, 1), std::out_of_range);
  EXPECT_THROW(retention_probability(beh, 0, 0, 1), std::out_of_range);

  StudyDesign d;
  d.type = {Occasion::Capture, Occasion::Capture, Occasion::Resight};
  d.effort = {10.0, 10.0, 0.0};
  d.location = {1, 2, 0};
  DetectionModel zero{};
  EXPECT_DOUBLE_EQ(capture_probability(zero, d, 1), 0.5);
  DetectionModel det{-2.0, 0.1, 0.5, 0.7, 0.5};
  EXPECT_NEAR(capture_probability(det, d, 1), inv_logit(-1.0), 1e-16);
  EXPECT_NEAR(capture_probability(det, d, 2), 1.0 / (1.0 + std::exp(0.5)), 1e-15);
  EXPECT_THROW(capture_probability(det, d, 3), std::invalid_argument);
}

TEST(LatentHistory, BoundaryCases) {
  OpenParamState s = simple_state(1, 2);
  s.behaviour.gamma_t = s.behaviour.gamma_a = 0.0;
  const int T = 5;
  const auto beta = entry_probabilities(s.arrival, T);
  EXPECT_NEAR(latent_history_logprob(s, beta, {1, T, T}), std::log(0.5 * beta[T - 1]), 1e-14);
  const double phi = inv_logit(s.behaviour.phi0[0]);
  EXPECT_NEAR(latent_history_logprob(s, beta, {0, 1, 1}), std::log(0.5 * beta[0] * (1.0 - phi)), 1e-14);

  OpenParamState h = simple_state(1, 1);
  h.behaviour = {{1.0}, {0.0}, 0.0, 0.0};
  const auto b5 = entry_probabilities(h.arrival, 5);
  EXPECT_NEAR(latent_history_logprob(h, b5, {0, 1, 3}), std::log(b5[0] * 0.25 * 0.5), 1e-14);
  EXPECT_THROW(latent_history_logprob(h, b5, {0, 3, 2}), std::out_of_range);
}

TEST(HistoryLoglik, SingleDayStudy) {
  StudyDesign d;
  d.type = {Occasion::Capture};
  d.effort = {2.0};
  d.location = {1};
  OpenParamState s = simple_state();
  const std::vector<double> beta{1.0};
  const double p = capture_probability(s.detection, d, 1);
  EXPECT_NEAR(history_loglik(s, beta, d, "1", bounds_of("1")), std::log(p), 1e-14);
  EXPECT_NEAR(oracle::brute_history_loglik(s, d, "1"), std::log(p), 1e-14);
}

TEST(HistoryLoglik, MatchesBruteForceEnumeration) {
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const int T = static_cast<int>(uniform_int(rng, 2, 8));
    const auto d = testing_support::random_design(rng, T);
    const auto s = testing_support::random_state(rng, T);
    const auto beta = entry_probabilities(s.arrival, T);
    const auto x = testing_support::random_history(rng, d);
    const double fast = history_loglik(s, beta, d, x, bounds_of(x));
    const double slow = oracle::brute_history_loglik(s, d, x);
    EXPECT_LE(std::abs(fast - slow), 1e-10) << x;
    EXPECT_LE(fast, 0.0);
    EXPECT_LE(std::abs(zero_history_loglik(s, beta, d) - oracle::brute_zero_loglik(s, d)), 1e-10);
    for (int t = 1; t <= T; ++t)
      if (d.resight(t)) {
        EXPECT_LE(rel_err(count_success_prob(s, beta, d, t), oracle::brute_zeta(s, d, t)), 1e-10);
      }
  }
}

TEST(HistoryLoglik, IdenticalGroupsCollapse) {
  StudyDesign d = StudyDesign::all_capture(4);
  OpenParamState one = simple_state(1, 1), two = simple_state(1, 2);
  two.behaviour.phi0 = {one.behaviour.phi0[0], one.behaviour.phi0[0]};
  const auto beta = entry_probabilities(one.arrival, 4);
  EXPECT_NEAR(history_loglik(one, beta, d, "0110", bounds_of("0110")),
              history_loglik(two, beta, d, "0110", bounds_of("0110")), 1e-14);
}

TEST(ZeroHistory, CertainAndImpossibleDetection) {
  StudyDesign d = StudyDesign::all_capture(1);
  OpenParamState s = simple_state();
  s.detection.cap0 = 800.0;
  // log(1 - expit(800)) = -800 exactly; the log-space path must not round to -inf.
  EXPECT_NEAR(zero_history_loglik(s, std::vector<double>{1.0}, d), -800.0, 1e-9);

  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const int T = static_cast<int>(uniform_int(rng, 2, 12));
    const auto dd = testing_support::random_design(rng, T);
    auto st = testing_support::random_state(rng, T);
    st.detection.cap0 = -800.0;
    st.detection.cap_e = 0.0;
    EXPECT_NEAR(zero_history_loglik(st, entry_probabilities(st.arrival, T), dd), 0.0, 1e-10);
  }
}

TEST(CountSuccess, SimpleCases) {
  StudyDesign d;
  d.type = {Occasion::Resight, Occasion::Resight, Occasion::Capture};
  d.effort = {0.0, 0.0, 1.0};
  d.location = {0, 0, 1};
  OpenParamState s = simple_state();
  const auto beta = entry_probabilities(s.arrival, 3);
  EXPECT_NEAR(count_success_prob(s, beta, d, 1), beta[0] * s.detection.s, 1e-15);
  s.detection.s = 0.0;
  EXPECT_EQ(count_success_prob(s, beta, d, 2), 0.0);
  EXPECT_THROW(count_success_prob(s, beta, d, 3), std::invalid_argument);
}

TEST(MarkedLoglik, ToyExpansion) {
  // T = 2 capture days, one history "10", N = 3, D = 1.
  StudyDesign d = StudyDesign::all_capture(2);
  OpenParamState s = simple_state();
  s.N = 3;
  ObservedData data;
  data.add("10", 1);
  data.counts.assign(2, std::nullopt);
  const auto beta = entry_probabilities(s.arrival, 2);
  const double p1 = capture_probability(s.detection, d, 1), p2 = capture_probability(s.detection, d, 2);
  const double f11 = retention_probability(s.behaviour, 0, 1, 1);
  // Arrive day 1 (stay or leave), caught day 1, missed day 2 if present.
  const double px = beta[0] * p1 * ((1.0 - f11) + f11 * (1.0 - p2));
  const double p0 = beta[0] * (1.0 - p1) * ((1.0 - f11) + f11 * (1.0 - p2)) + beta[1] * (1.0 - p2);
  const double expected = std::log(3.0) + std::log(px) + 2.0 * std::log(p0);
  EXPECT_NEAR(marked_loglik(s, data, d), expected, 1e-12);
  s.N = 1;
  EXPECT_NEAR(marked_loglik(s, data, d), std::log(px), 1e-12);
  s.N = 0;
  EXPECT_EQ(marked_loglik(s, data, d), kNegInf);
}

TEST(CountsLoglik, BinomialTerms) {
  StudyDesign d;
  d.type = {Occasion::Capture, Occasion::Resight};
  d.effort = {1.0, 0.0};
  d.location = {1, 0};
  ObservedData data;
  data.add("10", 1);
  data.counts = {std::nullopt, 3};
  OpenParamState s = simple_state();
  s.N = 10;
  const double z = count_success_prob(s, entry_probabilities(s.arrival, 2), d, 2);
  EXPECT_NEAR(counts_loglik(s, data, d), std::log(120.0) + 3 * std::log(z) + 7 * std::log1p(-z), 1e-12);
  s.detection.s = 0.0;
  EXPECT_EQ(counts_loglik(s, data, d), kNegInf);
  data.counts[1] = 0;
  EXPECT_EQ(counts_loglik(s, data, d), 0.0);
  data.counts[1] = 11;
  s.detection.s = 0.5;
  EXPECT_EQ(counts_loglik(s, data, d), kNegInf);
}

TEST(OpenLikelihood, IsLabelSymmetricAndSplitsExactly) {
  Rng rng(29);
  const int T = 7;
  const auto d = testing_support::random_design(rng, T);
  ObservedData data;
  for (int i = 0; i < 6; ++i) data.add(testing_support::random_history(rng, d), 1 + i % 3);
  data.counts.assign(T, std::nullopt);
  for (int t = 1; t <= T; ++t)
    if (d.resight(t)) data.counts[static_cast<std::size_t>(t - 1)] = t % 3;
  auto s = testing_support::random_state(rng, T, 3, 3);
  s.N = data.marked() + 20;
  const double full = open_log_likelihood(s, data, d);
  EXPECT_EQ(full, marked_loglik(s, data, d) + counts_loglik(s, data, d));
  auto perm = s;
  std::reverse(perm.arrival.w.begin(), perm.arrival.w.end());
  std::reverse(perm.arrival.mu.begin(), perm.arrival.mu.end());
  std::reverse(perm.arrival.sigma.begin(), perm.arrival.sigma.end());
  std::reverse(perm.behaviour.pi.begin(), perm.behaviour.pi.end());
  std::reverse(perm.behaviour.phi0.begin(), perm.behaviour.phi0.end());
  EXPECT_NEAR(open_log_likelihood(perm, data, d), full, 1e-10 * std::abs(full));
  EXPECT_NEAR(full, oracle::brute_open_loglik(s, d, data, {8, 1000, 3, 0}), 1e-9 * std::abs(full));
}

TEST(OpenLikelihood, CachedEvaluationMatchesRecomputation) {
  Rng rng(31);
  const int T = 8;
  const auto d = testing_support::random_design(rng, T);
  ObservedData data;
  for (int i = 0; i < 10; ++i) data.add(testing_support::random_history(rng, d), 1);
  data.counts.assign(T, std::nullopt);
  for (int t = 1; t <= T; ++t)
    if (d.resight(t)) data.counts[static_cast<std::size_t>(t - 1)] = 1;
  OpenLikelihood lik(d, data);
  auto s = testing_support::random_state(rng, T);
  s.N = 40;
  lik.commit(s);
  for (int step = 0; step < 300; ++step) {
    auto prop = s;
    switch (uniform_int(rng, 0, 4)) {
      case 0: prop.arrival.mu[0] += normal(rng, 0.0, 0.5); break;
      case 1: prop.behaviour.phi0[0] += normal(rng, 0.0, 0.5); break;
      case 2: prop.detection.cap0 += normal(rng, 0.0, 0.3); break;
      case 3: prop.behaviour.gamma_a += normal(rng, 0.0, 0.1); break;
      default: prop.detection.s = uniform(rng, 0.1, 0.9); break;
    }
    const double cached = lik(prop);
    OpenLikelihood fresh(d, data);
    ASSERT_EQ(cached, fresh(prop));
    if (bernoulli(rng, 0.5)) {
      s = prop;
      lik.commit(s);
    }
    ASSERT_EQ(lik(s), fresh(s));
  }
}
