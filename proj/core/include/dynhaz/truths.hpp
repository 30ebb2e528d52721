#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynhaz/simulate.hpp"

namespace dynhaz {

// Analytic hazard models used as simulation truths: value, first two
// derivatives and the cumulative in closed form, so theoretical bias and
// variance columns need no numerics.
//   constant {theta} | gompertz {a,b} | weibull {a,b} | makeham {a,b,c}
//   frailty {a,b} | poly {c0,c1,...} | changepoint {th1,th2,tstar}
struct Truth {
  std::string name;
  std::vector<double> params;

  double alpha(double s) const;
  double alpha_d1(double s) const;
  double alpha_d2(double s) const;
  double cumulative(double s) const;
  std::vector<double> knots() const;  // hazard discontinuities
};

Truth make_truth(const std::string& name, std::vector<double> params);

// Simulation law for a truth with optional censoring truth.
SimulationLaw make_law(const Truth& truth, const std::optional<Truth>& censoring,
                       double horizon, std::uint64_t seed);

// y(s) = P(X0 >= s) P(C >= s), closed form from the cumulatives.
double at_risk_limit(const Truth& truth, const std::optional<Truth>& censoring,
                     double s);
// y'(s)/y(s) = -(alpha_F(s) + alpha_G(s))
double at_risk_log_slope(const Truth& truth, const std::optional<Truth>& censoring,
                         double s);

}  // namespace dynhaz
