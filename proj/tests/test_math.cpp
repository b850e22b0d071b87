#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "stopover/math.hpp"
#include "stopover/random.hpp"

using namespace stopover;

TEST(Math, InverseLogitIsStableInTheTails) {
  EXPECT_DOUBLE_EQ(inv_logit(0.0), 0.5);
  EXPECT_NEAR(inv_logit(1.0), 0.7310585786300049, 1e-16);
  EXPECT_GT(inv_logit(-700.0), 0.0);
  EXPECT_LT(inv_logit(-700.0), 1e-300);
  EXPECT_EQ(inv_logit(700.0), 1.0);
  EXPECT_NEAR(log_inv_logit(-800.0), -800.0, 1e-9);
  EXPECT_NEAR(log1m_inv_logit(800.0), -800.0, 1e-9);
  EXPECT_NEAR(logit(inv_logit(1.3)), 1.3, 1e-14);
}

TEST(Math, LogSumExpHandlesInfinities) {
  EXPECT_EQ(log_add_exp(kNegInf, kNegInf), kNegInf);
  EXPECT_DOUBLE_EQ(log_add_exp(kNegInf, 2.0), 2.0);
  EXPECT_NEAR(log_add_exp(std::log(0.25), std::log(0.5)), std::log(0.75), 1e-15);
  const std::vector<double> xs{1000.0, 1000.0, kNegInf};
  EXPECT_NEAR(log_sum_exp(xs), 1000.0 + std::log(2.0), 1e-12);
}

TEST(Math, NormalTailsKeepRelativeAccuracy) {
  const boost::math::normal_distribution<double> nd(0.0, 1.0);
  for (double z : {-30.0, -8.0, -1.0, 0.0, 2.5, 9.0, 30.0}) {
    const double ref = boost::math::cdf(nd, z);
    EXPECT_NEAR(std_normal_cdf(z), ref, 1e-14 * std::max(ref, 1e-300)) << z;
    const double cref = boost::math::cdf(boost::math::complement(nd, z));
    EXPECT_NEAR(std_normal_ccdf(z), cref, 1e-14 * std::max(cref, 1e-300)) << z;
  }
  const double upper = normal_interval_mass(20.0, 21.0, 0.0, 2.0);
  const double ref = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(0.0, 2.0), 20.0)) -
                     boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(0.0, 2.0), 21.0));
  EXPECT_NEAR(upper / ref, 1.0, 1e-12);
}

TEST(Math, BinomialPmf) {
  EXPECT_NEAR(binomial_logpmf(3, 10, 0.3), std::log(120.0) + 3 * std::log(0.3) + 7 * std::log(0.7), 1e-12);
  EXPECT_EQ(binomial_logpmf(0, 10, 0.0), 0.0);
  EXPECT_EQ(binomial_logpmf(2, 10, 0.0), kNegInf);
  EXPECT_EQ(binomial_logpmf(10, 10, 1.0), 0.0);
  EXPECT_EQ(binomial_logpmf(11, 10, 0.5), kNegInf);
  EXPECT_NEAR(poisson_logpmf(3, 2.0), 3 * std::log(2.0) - 2.0 - std::log(6.0), 1e-14);
}

TEST(Random, StreamsAreReproducible) {
  Rng a(derive_seed(7, 1)), b(derive_seed(7, 1)), c(derive_seed(7, 2));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  EXPECT_NE(Rng(derive_seed(7, 1))(), c());
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(r);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Random, CategoricalFrequencies) {
  Rng r(3);
  const std::vector<double> w{0.2, 0.0, 0.8};
  std::vector<int> hits(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hits[categorical(r, w)];
  EXPECT_EQ(hits[1], 0);
  EXPECT_NEAR(hits[0] / double(n), 0.2, 4 * std::sqrt(0.16 / n));
}
