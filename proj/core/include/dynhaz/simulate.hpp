#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dynhaz/rng.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

// Random-censorship sampling law: failure times from the hazard
// true_hazard, censoring times from censoring_hazard (empty = no
// censoring), both truncated at the horizon. An observation whose failure
// and censoring times both exceed the horizon is recorded as
// (horizon, 0). Ties go to the failure (status 1 when X0 <= C).
struct SimulationLaw {
  std::function<double(double)> true_hazard;
  std::function<double(double)> censoring_hazard;  // empty -> none
  double horizon = 0;
  std::uint64_t seed = 0;
  // discontinuity points of the hazards, if any (piecewise laws)
  std::vector<double> knots;
};

// Tabulated cumulative hazard with numerical inversion. The table is
// refined until each cell integrates to 1e-12 accuracy, and inversion
// solves A(x) = e to 1e-10 in cumulative-hazard units.
class HazardSampler {
 public:
  HazardSampler(std::function<double(double)> hazard, double horizon,
                const std::vector<double>& knots = {});

  double total() const { return cum_.back(); }       // A(horizon)
  double cumulative(double t) const;
  // Draws one time; +inf when the event falls beyond the horizon.
  double draw(Rng& rng) const;

 private:
  double invert(double e) const;
  std::function<double(double)> hazard_;
  std::vector<double> grid_, cum_;
};

SurvivalSample simulate(const SimulationLaw& law, int n);

// Replicate k of a Monte Carlo run: same law, stream split_seed(seed, k).
SurvivalSample simulate_replicate(const SimulationLaw& law, int n, std::uint64_t k);

// Limiting at-risk proportion y(s) = P(X0 >= s) P(C >= s) of the law.
double at_risk_limit(const SimulationLaw& law, double s);

}  // namespace dynhaz
