#pragma once

#include <string>
#include <vector>

#include "dynhaz/hazard_family.hpp"
#include "dynhaz/kernel.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

// Pilot smoother configuration: a kernel-smoothed cumulative-hazard
// derivative with a smooth (biweight) kernel and a deliberately generous
// bandwidth, differentiable twice by differentiating the kernel.
struct PilotConfig {
  double h2 = 0;  // 0 = auto: 2 * horizon / n^{1/5}
};

class PilotEstimate {
 public:
  PilotEstimate(const SurvivalSample& sample, const PilotConfig& config);

  double value(double s) const;
  double d1(double s) const;
  double d2(double s) const;
  // false within h2/2 of either end of the observation period, where the
  // window is starved and the curve is flagged rather than trusted
  bool in_range(double s) const;
  double h2() const { return h2_; }
  const Kernel& kernel() const { return kernel_; }

 private:
  Kernel kernel_;
  double h2_;
  double horizon_;
  std::vector<double> jump_times_;
  std::vector<double> jump_sizes_;
};

// How h is chosen when a curve is estimated.
struct BandwidthPlan {
  enum class Kind { fixed, adaptive, plugin, gof };
  Kind kind = Kind::fixed;
  double h_fixed = 0;  // fixed
  double c = 0;        // adaptive / resolved plugin: h(s) = c * Y(s)^{-1/5}
  PilotConfig pilot;   // plugin
  bool resolved = false;
  std::string meta;    // capping / flooring notes for provenance

  static BandwidthPlan fixed(double h);
  static BandwidthPlan adaptive(double c);
  static BandwidthPlan plugin(PilotConfig pilot = {});
  static BandwidthPlan gof_driven();
  static BandwidthPlan parse(const std::string& text);  // "fixed:h" | "adaptive:c" | "plugin" | "gof"
  std::string to_string() const;

  // Realized bandwidth at s, capped at the horizon. gof plans resolve
  // per-point inside curve estimation, not here.
  double h_at(const SurvivalSample& sample, double s) const;
};

// Pointwise mean-squared-error optimal bandwidth
//   h0 = { gamma_K / beta_K^2 * alpha / b^2 }^{1/5} (n y)^{-1/5}
// together with the attained mse. A vanishing bias factor makes the
// optimum unbounded; the caller caps at the data range.
struct OptimalH {
  double h = 0;
  double mse = 0;
  bool unbounded = false;
};

OptimalH optimal_h_local(double alpha, double bias_factor, double y, double n,
                         const KernelConstants& kc);

enum class PluginWeight { y_to_4_5, one };

// Plug-in estimate of the constant in h(s) = c Y(s)^{-1/5} minimizing the
// weighted integrated mean squared error. The numerator integral reduces
// to a sum over failures; the denominator integrates the squared pilot
// bias factor, minus a smoothing-noise adjustment that can be switched
// off (subtract_noise).
BandwidthPlan plugin_global_c(const SurvivalSample& sample, const Kernel& kernel,
                              FamilyTag tag, const PilotConfig& pilot_config = {},
                              PluginWeight weight = PluginWeight::y_to_4_5,
                              bool subtract_noise = true);

PilotEstimate pilot_estimate(const SurvivalSample& sample,
                             const PilotConfig& config = {});

// Moving-average smoothing of an (s, v) series with the given span;
// windows shrink one-sidedly at the ends.
std::vector<std::pair<double, double>> post_smooth(
    const std::vector<std::pair<double, double>>& values, double span);

}  // namespace dynhaz
