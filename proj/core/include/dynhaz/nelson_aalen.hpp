#pragma once

#include <vector>

#include "dynhaz/kernel.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

// Right-continuous step estimate of the cumulative hazard. One jump per
// observed failure (tied failure times keep separate entries), of size
// 1 / Y(x_i).
struct CumulativeHazardPath {
  std::vector<double> jump_times;   // ascending, one per failure
  std::vector<double> jump_sizes;
  std::vector<double> cumulative;   // prefix sums of jump_sizes

  double evaluate(double t) const;
};

CumulativeHazardPath nelson_aalen(const SurvivalSample& sample);

// Kernel smooth of the cumulative-hazard increments:
//   sum over failures x_i in (s - h/2, s + h/2] of
//   K((x_i - s)/h) / (h Y(x_i)).
// With the uniform kernel this equals
// (A(s + h/2) - A(s - h/2)) / h exactly (window boundaries belong to the
// upper window).
double smoothed_hazard(const SurvivalSample& sample, const Kernel& kernel, double h,
                       double s);

}  // namespace dynhaz
