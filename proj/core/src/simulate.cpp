#include "dynhaz/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynhaz/error.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

HazardSampler::HazardSampler(std::function<double(double)> hazard, double horizon,
                             const std::vector<double>& knots)
    : hazard_(std::move(hazard)) {
  if (!(horizon > 0)) throw Error("horizon must be positive");
  std::vector<double> pts{0.0, horizon};
  for (double k : knots)
    if (k > 0 && k < horizon) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  // refine each panel until the embedded error estimate clears 1e-12
  grid_.push_back(0.0);
  cum_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    std::vector<double> stack{pts[i + 1]};
    double lo = pts[i];
    while (!stack.empty()) {
      const double hi = stack.back();
      double err = 0.0;
      const double v = gauss_kronrod_15(hazard_, lo, hi, &err);
      if (err > 1e-12 && (hi - lo) > 1e-12 * (1.0 + hi)) {
        stack.push_back(0.5 * (lo + hi));
        continue;
      }
      stack.pop_back();
      if (!std::isfinite(v) || v < -1e-12)
        throw Error("hazard not integrable on [0, horizon]");
      grid_.push_back(hi);
      cum_.push_back(cum_.back() + std::max(v, 0.0));
      lo = hi;
    }
  }
  if (!std::isfinite(cum_.back())) throw Error("hazard not integrable on [0, horizon]");
}

double HazardSampler::cumulative(double t) const {
  if (t <= 0) return 0.0;
  if (t >= grid_.back()) return cum_.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - grid_.begin()) - 1;
  return cum_[k] + gauss_kronrod_15(hazard_, grid_[k], t);
}

double HazardSampler::invert(double e) const {
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), e);
  std::size_t k = static_cast<std::size_t>(it - cum_.begin());
  if (k > 0) --k;
  if (k + 1 >= grid_.size()) k = grid_.size() - 2;
  double lo = grid_[k], hi = grid_[k + 1];
  double flo = cum_[k] - e, fhi = cum_[k + 1] - e;
  double x = lo + (hi - lo) * (flo != fhi ? -flo / (fhi - flo) : 0.5);
  for (int iter = 0; iter < 128; ++iter) {
    const double fx = cum_[k] + gauss_kronrod_15(hazard_, grid_[k], x) - e;
    if (std::abs(fx) <= 1e-10) return x;
    if (fx > 0) {
      hi = x;
      fhi = fx;
    } else {
      lo = x;
      flo = fx;
    }
    const double d = hazard_(x);
    double step = (d > 1e-300) ? x - fx / d : 0.0;
    x = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
  }
  return x;
}

double HazardSampler::draw(Rng& rng) const {
  const double e = rng.exponential();
  if (e > total()) return std::numeric_limits<double>::infinity();
  return invert(e);
}

SurvivalSample simulate(const SimulationLaw& law, int n) {
  if (n < 1) throw Error("simulate: n must be >= 1");
  HazardSampler failure(law.true_hazard, law.horizon, law.knots);
  const bool censored = static_cast<bool>(law.censoring_hazard);
  HazardSampler censor = censored
                             ? HazardSampler(law.censoring_hazard, law.horizon, law.knots)
                             : HazardSampler([](double) { return 0.0; }, law.horizon);
  Rng rng(law.seed);
  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(n));
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x0 = failure.draw(rng);
    const double c = censored ? censor.draw(rng) : inf;
    if (x0 <= c && x0 <= law.horizon)
      obs.push_back({x0, 1});
    else if (c < x0 && c <= law.horizon)
      obs.push_back({c, 0});
    else
      obs.push_back({law.horizon, 0});
  }
  return SurvivalSample::from_observations(std::move(obs), law.horizon);
}

SurvivalSample simulate_replicate(const SimulationLaw& law, int n, std::uint64_t k) {
  SimulationLaw rep = law;
  rep.seed = split_seed(law.seed, k);
  return simulate(rep, n);
}

double at_risk_limit(const SimulationLaw& law, double s) {
  HazardSampler failure(law.true_hazard, law.horizon, law.knots);
  double a = failure.cumulative(s);
  if (law.censoring_hazard) {
    HazardSampler censor(law.censoring_hazard, law.horizon, law.knots);
    a += censor.cumulative(s);
  }
  return std::exp(-a);
}

}  // namespace dynhaz
