#pragma once

// Random small instances shared by the unit and acceptance tests.

#include <string>
#include <vector>

#include "stopover/params.hpp"
#include "stopover/random.hpp"
#include "stopover/study_data.hpp"

namespace testing_support {

using namespace stopover;

inline std::vector<double> dirichlet_ones(Rng& rng, int k) {
  std::vector<double> v(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (auto& x : v) sum += x = -std::log(1.0 - uniform01(rng));
  for (auto& x : v) x /= sum;
  return v;
}

/// Random calendar with at least one capture day.
inline StudyDesign random_design(Rng& rng, int T) {
  StudyDesign d;
  for (int t = 0; t < T; ++t) {
    const double u = uniform01(rng);
    if (u < 0.5) {
      d.type.push_back(Occasion::Capture);
      d.effort.push_back(uniform(rng, 0.0, 10.0));
      d.location.push_back(static_cast<int>(uniform_int(rng, 1, 3)));
    } else {
      d.type.push_back(u < 0.8 ? Occasion::Resight : Occasion::Null);
      d.effort.push_back(0.0);
      d.location.push_back(0);
    }
  }
  const auto k = static_cast<std::size_t>(uniform_int(rng, 0, T - 1));
  if (d.type[k] != Occasion::Capture) {
    d.type[k] = Occasion::Capture;
    d.effort[k] = uniform(rng, 0.0, 10.0);
    d.location[k] = static_cast<int>(uniform_int(rng, 1, 3));
  }
  return d;
}

inline OpenParamState random_state(Rng& rng, int T, int max_M = 3, int max_G = 3) {
  OpenParamState s;
  const int M = static_cast<int>(uniform_int(rng, 1, max_M));
  const int G = static_cast<int>(uniform_int(rng, 1, max_G));
  s.arrival.w = dirichlet_ones(rng, M);
  for (int m = 0; m < M; ++m) {
    s.arrival.mu.push_back(uniform(rng, -1.0, T + 2.0));
    s.arrival.sigma.push_back(uniform(rng, 0.3, std::max(1.0, static_cast<double>(T))));
  }
  s.behaviour.pi = dirichlet_ones(rng, G);
  for (int g = 0; g < G; ++g) s.behaviour.phi0.push_back(normal(rng, 0.0, 1.5));
  s.behaviour.gamma_t = normal(rng, 0.0, 0.3);
  s.behaviour.gamma_a = normal(rng, 0.0, 0.3);
  s.detection.cap0 = normal(rng, -0.5, 1.0);
  s.detection.cap_e = normal(rng, 0.0, 0.1);
  s.detection.cap_loc2 = normal(rng, 0.0, 0.5);
  s.detection.cap_loc3 = normal(rng, 0.0, 0.5);
  s.detection.s = uniform(rng, 0.05, 0.95);
  s.N = uniform_int(rng, 1, 10);
  return s;
}

/// A valid observed history: first capture on a random capture day, arbitrary afterwards.
inline std::string random_history(Rng& rng, const StudyDesign& d) {
  std::vector<int> caps;
  for (int t = 1; t <= d.T(); ++t)
    if (d.capture(t)) caps.push_back(t);
  const int f = caps[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(caps.size()) - 1))];
  std::string x;
  for (int t = 1; t <= d.T(); ++t) {
    if (!d.sampled(t)) x += code::missing;
    else if (t < f) x += code::missed;
    else if (t == f) x += code::captured;
    else if (d.capture(t)) x += bernoulli(rng, 0.4) ? code::captured : code::missed;
    else x += bernoulli(rng, 0.4) ? code::resighted : code::missed;
  }
  return x;
}

}  // namespace testing_support
