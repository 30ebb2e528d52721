#include "dynhaz/truths.hpp"

#include <cmath>

#include "dynhaz/error.hpp"

namespace dynhaz {

namespace {

void require_params(const Truth& t, std::size_t n) {
  if (t.params.size() != n)
    throw Error("truth '" + t.name + "' expects " + std::to_string(n) + " parameters");
}

}  // namespace

double Truth::alpha(double s) const {
  const auto& p = params;
  if (name == "constant") return p[0];
  if (name == "gompertz") return p[0] * std::exp(p[1] * s);
  if (name == "weibull") return p[0] * p[1] * std::pow(std::max(s, 1e-300), p[1] - 1.0);
  if (name == "makeham") return p[0] + p[1] * std::exp(p[2] * s);
  if (name == "frailty") return p[0] / (1.0 + p[1] * s);
  if (name == "poly") {
    double v = 0;
    for (std::size_t k = p.size(); k-- > 0;) v = v * s + p[k];
    return v;
  }
  if (name == "changepoint") return s < p[2] ? p[0] : p[1];
  throw Error("unknown truth: " + name);
}

double Truth::alpha_d1(double s) const {
  const auto& p = params;
  if (name == "constant") return 0.0;
  if (name == "gompertz") return p[0] * p[1] * std::exp(p[1] * s);
  if (name == "weibull")
    return p[0] * p[1] * (p[1] - 1.0) * std::pow(std::max(s, 1e-300), p[1] - 2.0);
  if (name == "makeham") return p[1] * p[2] * std::exp(p[2] * s);
  if (name == "frailty") {
    const double q = 1.0 + p[1] * s;
    return -p[0] * p[1] / (q * q);
  }
  if (name == "poly") {
    double v = 0;
    for (std::size_t k = p.size(); k-- > 1;)
      v = v * s + p[k] * static_cast<double>(k);
    return v;
  }
  if (name == "changepoint") return 0.0;
  throw Error("unknown truth: " + name);
}

double Truth::alpha_d2(double s) const {
  const auto& p = params;
  if (name == "constant") return 0.0;
  if (name == "gompertz") return p[0] * p[1] * p[1] * std::exp(p[1] * s);
  if (name == "weibull")
    return p[0] * p[1] * (p[1] - 1.0) * (p[1] - 2.0) *
           std::pow(std::max(s, 1e-300), p[1] - 3.0);
  if (name == "makeham") return p[1] * p[2] * p[2] * std::exp(p[2] * s);
  if (name == "frailty") {
    const double q = 1.0 + p[1] * s;
    return 2.0 * p[0] * p[1] * p[1] / (q * q * q);
  }
  if (name == "poly") {
    double v = 0;
    for (std::size_t k = p.size(); k-- > 2;)
      v = v * s + p[k] * static_cast<double>(k) * static_cast<double>(k - 1);
    return v;
  }
  if (name == "changepoint") return 0.0;
  throw Error("unknown truth: " + name);
}

double Truth::cumulative(double s) const {
  const auto& p = params;
  if (name == "constant") return p[0] * s;
  if (name == "gompertz")
    return std::abs(p[1]) < 1e-12 ? p[0] * s : p[0] * std::expm1(p[1] * s) / p[1];
  if (name == "weibull") return p[0] * std::pow(std::max(s, 0.0), p[1]);
  if (name == "makeham")
    return p[0] * s + (std::abs(p[2]) < 1e-12 ? p[1] * s
                                              : p[1] * std::expm1(p[2] * s) / p[2]);
  if (name == "frailty")
    return std::abs(p[1]) < 1e-12 ? p[0] * s : p[0] * std::log1p(p[1] * s) / p[1];
  if (name == "poly") {
    double v = 0;
    for (std::size_t k = p.size(); k-- > 0;)
      v = v * s + p[k] / static_cast<double>(k + 1);
    return v * s;
  }
  if (name == "changepoint")
    return s < p[2] ? p[0] * s : p[0] * p[2] + p[1] * (s - p[2]);
  throw Error("unknown truth: " + name);
}

std::vector<double> Truth::knots() const {
  if (name == "changepoint") return {params[2]};
  return {};
}

Truth make_truth(const std::string& name, std::vector<double> params) {
  Truth t{name, std::move(params)};
  if (name == "constant") require_params(t, 1);
  else if (name == "gompertz" || name == "weibull" || name == "frailty")
    require_params(t, 2);
  else if (name == "makeham" || name == "changepoint") require_params(t, 3);
  else if (name == "poly") {
    if (t.params.empty()) throw Error("poly truth needs coefficients");
  } else {
    throw Error("unknown truth: " + name);
  }
  t.alpha(0.0);  // validates
  return t;
}

SimulationLaw make_law(const Truth& truth, const std::optional<Truth>& censoring,
                       double horizon, std::uint64_t seed) {
  SimulationLaw law;
  Truth t = truth;
  law.true_hazard = [t](double s) { return t.alpha(s); };
  if (censoring) {
    Truth g = *censoring;
    law.censoring_hazard = [g](double s) { return g.alpha(s); };
    for (double k : g.knots()) law.knots.push_back(k);
  }
  for (double k : truth.knots()) law.knots.push_back(k);
  law.horizon = horizon;
  law.seed = seed;
  return law;
}

double at_risk_limit(const Truth& truth, const std::optional<Truth>& censoring,
                     double s) {
  double a = truth.cumulative(s);
  if (censoring) a += censoring->cumulative(s);
  return std::exp(-a);
}

double at_risk_log_slope(const Truth& truth, const std::optional<Truth>& censoring,
                         double s) {
  double v = truth.alpha(s);
  if (censoring) v += censoring->alpha(s);
  return -v;
}

}  // namespace dynhaz
