#include "dynhaz/nelson_aalen.hpp"

#include <algorithm>

#include "dynhaz/error.hpp"

namespace dynhaz {

double CumulativeHazardPath::evaluate(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - jump_times.begin());
  return k == 0 ? 0.0 : cumulative[k - 1];
}

CumulativeHazardPath nelson_aalen(const SurvivalSample& sample) {
  CumulativeHazardPath path;
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  double running = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!status[i]) continue;
    const double jump = 1.0 / sample.at_risk(times[i]);
    running += jump;
    path.jump_times.push_back(times[i]);
    path.jump_sizes.push_back(jump);
    path.cumulative.push_back(running);
  }
  return path;
}

double smoothed_hazard(const SurvivalSample& sample, const Kernel& kernel, double h,
                       double s) {
  if (!(h > 0)) throw Error("bandwidth must be positive");
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  const double lo = s - 0.5 * h, hi = s + 0.5 * h;
  auto it = std::upper_bound(times.begin(), times.end(), lo);
  double sum = 0.0;
  for (; it != times.end() && *it <= hi; ++it) {
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    if (!status[i]) continue;
    // membership is decided by (lo, hi]; clamp the kernel argument so a
    // boundary point cannot fall off the support by rounding
    const double u = std::clamp((*it - s) / h, -0.5, 0.5);
    sum += kernel(u) / sample.at_risk(*it);
  }
  return sum / h;
}

}  // namespace dynhaz
