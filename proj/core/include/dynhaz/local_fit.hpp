#pragma once

#include <string>
#include <vector>

#include "dynhaz/bandwidth.hpp"
#include "dynhaz/fit.hpp"
#include "dynhaz/gof.hpp"
#include "dynhaz/hazard_family.hpp"
#include "dynhaz/kernel.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

// Local kernel-weighted likelihood fit at s: maximize
//   int K((t-s)/h) { log alpha(t, theta) dN(t) - Y(t) alpha(t, theta) dt }
// over the window (s - h/2, s + h/2] and read the hazard off at s. For the
// anchored product families the returned level parameter is the hazard
// value itself; the shape is along for the ride.
struct LocalPointFit {
  std::vector<double> theta;
  double alpha_hat = 0;
  double se = 0;  // sqrt(gamma_K alpha-hat / (h Y(s)))
  FitResult fit;
};

LocalPointFit fit_local_at(const SurvivalSample& sample, const std::string& family,
                           const Kernel& kernel, double s, double h,
                           int min_events = 10);

// Locally weighted occurrence over locally weighted exposure: the closed
// form the constant family reduces to. Kept as an independent fast path;
// it must agree with fit_local_at("constant", ...) to near machine
// precision.
double local_constant(const SurvivalSample& sample, const Kernel& kernel, double s,
                      double h);

enum class PointFlag {
  ok,
  startup,          // left-end policy: fitted on [0, b0]
  mirrored,         // right-end policy: fitted on [b0', horizon]
  full_range,       // no detectable departure: global parametric fit
  insufficient_window,
  not_converged,
  zero_risk
};

std::string to_string(PointFlag flag);

struct CurvePoint {
  double s = 0;
  double alpha_hat = 0;
  double h_used = 0;
  double se = 0;
  double band_lo = 0;
  double band_hi = 0;
  std::vector<double> theta_local;
  PointFlag flag = PointFlag::ok;
  bool usable() const {
    return flag == PointFlag::ok || flag == PointFlag::startup ||
           flag == PointFlag::mirrored || flag == PointFlag::full_range;
  }
};

struct LocalFitSpec {
  std::string family = "constant";
  Kernel kernel = Kernel::epanechnikov();
  BandwidthPlan bandwidth = BandwidthPlan::fixed(1.0);
  std::vector<double> grid;
  int min_events = 10;

  // window-expansion / startup controls
  GofKind gof_kind = GofKind::ks_const;
  double gof_level = 0.10;
  bool smooth_gof_h = true;    // post-smooth the selected h(s) curve
  double gof_h_span = 0;       // 0 = auto (an eighth of the grid extent)

  // optional second pass: smooth the local shape estimates across the grid
  // and re-solve the level with the shape pinned
  bool post_smooth_shape = false;
  double shape_span = 0;       // 0 = auto (an eighth of the grid extent)

  double band_level = 0.95;
  bool band_bias_correction = false;

  int threads = 0;  // 0 = hardware concurrency
};

struct HazardCurve {
  std::vector<CurvePoint> points;
  std::string family;
  std::string kernel;
  std::string bandwidth;
};

HazardCurve estimate_curve(const SurvivalSample& sample, const LocalFitSpec& spec);

// Leading-order bias factors of the locally fitted families, in terms of
// the true hazard and its derivatives (and the at-risk drift y'/y for the
// locally constant fit). The curve's mean error is
// (beta_K / 2) h^2 * bias_factor + O(h^4).
double bias_factor(FamilyTag tag, double alpha, double alpha_d1, double alpha_d2,
                   double y, double y_d1, double s);

// One-parameter family version with the model-induced terms evaluated by
// finite differences at the locally least-false parameter.
double bias_factor_generic(const HazardFamily& one_param_family,
                           const std::vector<double>& theta0, double alpha,
                           double alpha_d1, double alpha_d2, double y, double y_d1,
                           double s);

double normal_quantile(double p);

// alpha-hat - correction +/- z * se. The correction (when enabled) is
// (beta_K / 2) h^2 times a pilot estimate of the bias factor.
std::pair<double, double> pointwise_band(double alpha_hat, double se, double level,
                                         double bias_correction = 0.0);

enum class DensityMode { plug_in, product_integral };

// Density along the curve grid: plug_in exponentiates the fitted family's
// own cumulative at each point; product_integral accumulates the curve
// hazard by the trapezoid rule from 0.
std::vector<std::pair<double, double>> density_estimates(const HazardCurve& curve,
                                                         const std::string& family,
                                                         DensityMode mode);

}  // namespace dynhaz
