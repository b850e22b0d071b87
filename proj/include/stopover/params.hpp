#pragma once

// Parameter blocks of the open (stopover) and closed (heterogeneous capture)
// models. Component indices are 0-based; days and ages are 1-based.

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace stopover {

namespace detail {
inline void check_proportions(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": no components");
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative fraction");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": fractions do not sum to 1");
}
}  // namespace detail

/// Normal mixture over arrival time.
struct ArrivalMixture {
  std::vector<double> w;
  std::vector<double> mu;
  std::vector<double> sigma;

  int M() const { return static_cast<int>(w.size()); }

  void validate() const {
    detail::check_proportions(w, "arrival");
    if (mu.size() != w.size() || sigma.size() != w.size())
      throw std::invalid_argument("arrival: block lengths differ");
    for (double s : sigma)
      if (!(s > 0.0)) throw std::invalid_argument("arrival: sigma must be positive");
  }

  bool operator==(const ArrivalMixture&) const = default;
};

/// Retention groups: logit(phi_gta) = phi0[g] + gamma_t * t + gamma_a * a.
struct BehaviourModel {
  std::vector<double> pi;
  std::vector<double> phi0;
  double gamma_t = 0.0;
  double gamma_a = 0.0;

  int G() const { return static_cast<int>(pi.size()); }

  double retention_logit(int g, int t, int a) const {
    return phi0[static_cast<std::size_t>(g)] + gamma_t * t + gamma_a * a;
  }

  void validate() const {
    detail::check_proportions(pi, "behaviour");
    if (phi0.size() != pi.size()) throw std::invalid_argument("behaviour: block lengths differ");
  }

  bool operator==(const BehaviourModel&) const = default;
};

/// Capture logistic regression on effort and location, constant resight probability.
struct DetectionModel {
  double cap0 = 0.0;
  double cap_e = 0.0;
  double cap_loc2 = 0.0;
  double cap_loc3 = 0.0;
  double s = 0.5;

  void validate() const {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("detection: s outside [0,1]");
    for (double c : {cap0, cap_e, cap_loc2, cap_loc3})
      if (!std::isfinite(c)) throw std::invalid_argument("detection: non-finite coefficient");
  }

  bool operator==(const DetectionModel&) const = default;
};

struct OpenParamState {
  long N = 0;
  ArrivalMixture arrival;
  BehaviourModel behaviour;
  DetectionModel detection;

  int M() const { return arrival.M(); }
  int G() const { return behaviour.G(); }

  void validate(long marked = 0) const {
    if (N < marked) throw std::invalid_argument("state: N below number of marked animals");
    arrival.validate();
    behaviour.validate();
    detection.validate();
  }

  bool operator==(const OpenParamState&) const = default;
};

/// Latent life history z = (g, b, d): group, arrival day, departure day.
struct LatentHistory {
  int g = 0;
  int b = 1;
  int d = 1;
};

/// Closed population with G capture-probability groups.
struct ClosedParamState {
  std::vector<double> pi;
  std::vector<double> p;
  long N = 0;

  int G() const { return static_cast<int>(pi.size()); }
  int M() const { return 1; }

  void validate(long marked = 0) const {
    detail::check_proportions(pi, "closed");
    if (p.size() != pi.size()) throw std::invalid_argument("closed: block lengths differ");
    for (double x : p)
      if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("closed: capture probability outside (0,1)");
    if (N < marked) throw std::invalid_argument("closed: N below number of marked animals");
  }

  bool operator==(const ClosedParamState&) const = default;
};

}  // namespace stopover
