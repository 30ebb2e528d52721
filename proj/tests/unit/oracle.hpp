#pragma once

// Test-side numerical oracles, deliberately independent of the library's
// integration and sampling code paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "dynhaz/survival_data.hpp"

namespace oracle {

// composite Simpson with doubling until two refinements agree
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-12) {
  if (!(b > a)) return 0.0;
  auto pass = [&](int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
  };
  double prev = pass(64);
  for (int n = 128; n <= (1 << 22); n *= 2) {
    const double cur = pass(n);
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  return prev;
}

// exposure of a sample computed the slow per-individual way:
// sum_i int over [a,b] cap [0, x_i] of w
inline double exposure_by_individuals(const dynhaz::SurvivalSample& sample,
                                      const std::function<double(double)>& w,
                                      double a, double b) {
  double total = 0;
  for (double x : sample.times()) {
    const double hi = std::min(b, x);
    if (hi > a) total += simpson(w, a, hi, 1e-13);
  }
  return total;
}

// small deterministic censored samples for randomized cases
inline dynhaz::SurvivalSample random_sample(std::mt19937_64& gen, int n,
                                            double horizon, double censor_prob) {
  std::vector<dynhaz::Observation> obs;
  std::uniform_real_distribution<double> ud(0.0, horizon);
  std::bernoulli_distribution cens(censor_prob);
  for (int i = 0; i < n; ++i) obs.push_back({ud(gen), cens(gen) ? 0 : 1});
  return dynhaz::SurvivalSample::from_observations(std::move(obs), horizon);
}

}  // namespace oracle
