#include "dynhaz/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "dynhaz/error.hpp"
#include "dynhaz/nelson_aalen.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

PilotEstimate::PilotEstimate(const SurvivalSample& sample, const PilotConfig& config)
    : kernel_(Kernel::biweight()), horizon_(sample.horizon()) {
  h2_ = config.h2 > 0
            ? config.h2
            : 2.0 * sample.horizon() / std::pow(static_cast<double>(sample.size()), 0.2);
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!status[i]) continue;
    jump_times_.push_back(times[i]);
    jump_sizes_.push_back(1.0 / sample.at_risk(times[i]));
  }
}

bool PilotEstimate::in_range(double s) const {
  return s >= 0.5 * h2_ && s <= horizon_ - 0.5 * h2_;
}

double PilotEstimate::value(double s) const {
  const double lo = s - 0.5 * h2_, hi = s + 0.5 * h2_;
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), lo);
  double sum = 0;
  for (; it != jump_times_.end() && *it <= hi; ++it) {
    const auto i = static_cast<std::size_t>(it - jump_times_.begin());
    sum += kernel_(std::clamp((*it - s) / h2_, -0.5, 0.5)) * jump_sizes_[i];
  }
  return sum / h2_;
}

double PilotEstimate::d1(double s) const {
  const double lo = s - 0.5 * h2_, hi = s + 0.5 * h2_;
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), lo);
  double sum = 0;
  for (; it != jump_times_.end() && *it <= hi; ++it) {
    const auto i = static_cast<std::size_t>(it - jump_times_.begin());
    sum += kernel_.derivative(std::clamp((*it - s) / h2_, -0.5, 0.5), 1) *
           jump_sizes_[i];
  }
  return -sum / (h2_ * h2_);
}

double PilotEstimate::d2(double s) const {
  const double lo = s - 0.5 * h2_, hi = s + 0.5 * h2_;
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), lo);
  double sum = 0;
  for (; it != jump_times_.end() && *it <= hi; ++it) {
    const auto i = static_cast<std::size_t>(it - jump_times_.begin());
    sum += kernel_.derivative(std::clamp((*it - s) / h2_, -0.5, 0.5), 2) *
           jump_sizes_[i];
  }
  return sum / (h2_ * h2_ * h2_);
}

PilotEstimate pilot_estimate(const SurvivalSample& sample, const PilotConfig& config) {
  return PilotEstimate(sample, config);
}

BandwidthPlan BandwidthPlan::fixed(double h) {
  if (!(h > 0)) throw Error("bandwidth must be positive");
  BandwidthPlan p;
  p.kind = Kind::fixed;
  p.h_fixed = h;
  p.resolved = true;
  return p;
}

BandwidthPlan BandwidthPlan::adaptive(double c) {
  if (!(c > 0)) throw Error("bandwidth constant must be positive");
  BandwidthPlan p;
  p.kind = Kind::adaptive;
  p.c = c;
  p.resolved = true;
  return p;
}

BandwidthPlan BandwidthPlan::plugin(PilotConfig pilot) {
  BandwidthPlan p;
  p.kind = Kind::plugin;
  p.pilot = pilot;
  return p;
}

BandwidthPlan BandwidthPlan::gof_driven() {
  BandwidthPlan p;
  p.kind = Kind::gof;
  return p;
}

BandwidthPlan BandwidthPlan::parse(const std::string& text) {
  if (text == "plugin") return plugin();
  if (text == "gof") return gof_driven();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    double v = 0;
    try {
      v = std::stod(text.substr(colon + 1));
    } catch (...) {
      throw Error("cannot parse bandwidth: " + text);
    }
    if (head == "fixed") return fixed(v);
    if (head == "adaptive") return adaptive(v);
  }
  throw Error("cannot parse bandwidth: " + text);
}

std::string BandwidthPlan::to_string() const {
  switch (kind) {
    case Kind::fixed: return "fixed:" + std::to_string(h_fixed);
    case Kind::adaptive: return "adaptive:" + std::to_string(c);
    case Kind::plugin:
      return resolved ? "plugin(c=" + std::to_string(c) + ")" : "plugin";
    case Kind::gof: return "gof";
  }
  return "?";
}

double BandwidthPlan::h_at(const SurvivalSample& sample, double s) const {
  switch (kind) {
    case Kind::fixed:
      return std::min(h_fixed, 2.0 * sample.horizon());
    case Kind::adaptive:
    case Kind::plugin: {
      if (!resolved) throw Error("plugin bandwidth not resolved yet");
      const int y = sample.at_risk(s);
      if (y <= 0) return sample.horizon();
      return std::min(c * std::pow(static_cast<double>(y), -0.2), sample.horizon());
    }
    case Kind::gof:
      throw Error("gof bandwidth resolves per point during curve estimation");
  }
  throw Error("bad bandwidth plan");
}

OptimalH optimal_h_local(double alpha, double bias_factor, double y, double n,
                         const KernelConstants& kc) {
  if (!(alpha > 0) || !(y > 0) || !(n > 0)) throw Error("optimal_h_local: bad inputs");
  OptimalH out;
  if (bias_factor == 0.0) {
    out.unbounded = true;
    out.h = std::numeric_limits<double>::infinity();
    out.mse = 0.0;
    return out;
  }
  const double b2 = bias_factor * bias_factor;
  out.h = std::pow(kc.gamma_k / (kc.beta_k * kc.beta_k) * alpha / b2, 0.2) *
          std::pow(n * y, -0.2);
  out.mse = 1.25 * std::pow(kc.beta_k * kc.gamma_k * kc.gamma_k, 0.4) *
            std::pow(alpha, 0.8) * std::pow(std::abs(bias_factor), 0.4) *
            std::pow(n * y, -0.8);
  return out;
}

BandwidthPlan plugin_global_c(const SurvivalSample& sample, const Kernel& kernel,
                              FamilyTag tag, const PilotConfig& pilot_config,
                              PluginWeight weight, bool subtract_noise) {
  if (sample.total_failures() < 30)
    throw Error("plugin bandwidth needs at least 30 failures; use fixed h");
  const double n = sample.size();
  const double horizon = sample.horizon();
  const PilotEstimate pilot(sample, pilot_config);

  // numerator int w y^{-4/5} alpha ds as a sum over failures
  double numerator = 0.0;
  {
    const auto& times = sample.times();
    const auto& status = sample.statuses();
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!status[i]) continue;
      const double yh = sample.at_risk(times[i]) / n;
      numerator += (weight == PluginWeight::y_to_4_5)
                       ? 1.0 / (n * yh)
                       : std::pow(yh, -9.0 / 5.0) / n;
    }
  }

  // total-hazard smoother (all observations as events) for y'/y, needed by
  // the locally-constant bias factor
  PilotEstimate total_rate = [&] {
    std::vector<Observation> all;
    all.reserve(static_cast<std::size_t>(sample.size()));
    for (std::size_t i = 0; i < sample.times().size(); ++i)
      all.push_back({sample.times()[i], 1});
    const SurvivalSample flat =
        SurvivalSample::from_observations(std::move(all), horizon);
    return PilotEstimate(flat, PilotConfig{pilot.h2()});
  }();

  auto bias_hat = [&](double s) {
    const double a0 = std::max(pilot.value(s), 1e-12);
    const double a1 = pilot.d1(s);
    const double a2 = pilot.d2(s);
    switch (tag) {
      case FamilyTag::constant: return a2 + 2.0 * a1 * (-total_rate.value(s));
      case FamilyTag::gompertz: return a2 - a1 * a1 / a0;
      case FamilyTag::weibull: return a2 - a1 * a1 / a0 + a1 / s;
      case FamilyTag::frailty: return a2 - 2.0 * a1 * a1 / a0;
      case FamilyTag::generic: return a2;  // traditional smoother target
    }
    return a2;
  };

  // denominator: interior integral of the squared pilot bias factor,
  // optionally minus the pilot smoothing-noise variance (an in-house
  // adjustment, recorded in meta)
  const double rho_k2 = adaptive_quad(
      [&](double u) {
        const double d2 = pilot.kernel().derivative(u, 2);
        return d2 * d2;
      },
      -0.5, 0.5, 1e-10);
  const double lo = 0.5 * pilot.h2(), hi = horizon - 0.5 * pilot.h2();
  std::string meta = "plugin";
  double raw_integral = 0.0, noise_integral = 0.0;
  if (hi > lo) {
    const int m = 400;
    double prev_f = 0.0, prev_v = 0.0, prev_s = lo;
    for (int k = 0; k <= m; ++k) {
      const double s = lo + (hi - lo) * k / m;
      const double yh = std::max(sample.at_risk(s) / n, 1.0 / n);
      double b2 = bias_hat(s);
      b2 *= b2;
      const double noise = rho_k2 * std::max(pilot.value(s), 0.0) /
                           (n * yh * std::pow(pilot.h2(), 5.0));
      const double wfac = (weight == PluginWeight::y_to_4_5)
                              ? 1.0
                              : std::pow(yh, -4.0 / 5.0);
      if (k > 0) {
        raw_integral += 0.5 * (prev_f + wfac * b2) * (s - prev_s);
        noise_integral += 0.5 * (prev_v + wfac * noise) * (s - prev_s);
      }
      prev_f = wfac * b2;
      prev_v = wfac * noise;
      prev_s = s;
    }
  }

  // The squared pilot bias factor carries the smoothing noise on top of the
  // signal; subtracting its mean is the adjustment, and a signal that does
  // not clear the noise floor means no detectable curvature: fall back to
  // the widest windows.
  const double c_max = horizon * std::pow(n, 0.2);
  double denominator = subtract_noise ? raw_integral - noise_integral : raw_integral;
  bool undetected = false;
  if (subtract_noise && raw_integral - noise_integral <= 0.6 * noise_integral) {
    undetected = true;
    meta += ",curvature-below-noise";
  }
  if (!(denominator > 0)) {
    denominator = 1e-12 * std::max(numerator, 1e-12);
    meta += ",denominator-floored";
  }

  const auto& kc = kernel.constants();
  double c = undetected
                 ? c_max
                 : std::pow(kc.gamma_k / (kc.beta_k * kc.beta_k) * numerator /
                                denominator,
                            0.2);
  if (c > c_max) c = c_max;
  if (c == c_max) meta += ",c-capped";
  if (subtract_noise) meta += ",noise-adjusted";

  BandwidthPlan plan;
  plan.kind = BandwidthPlan::Kind::plugin;
  plan.pilot = pilot_config;
  plan.c = c;
  plan.resolved = true;
  plan.meta = meta;
  return plan;
}

std::vector<std::pair<double, double>> post_smooth(
    const std::vector<std::pair<double, double>>& values, double span) {
  if (values.size() < 3 || !(span > 0)) return values;
  std::vector<std::pair<double, double>> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double s = values[i].first;
    double sum = 0;
    int cnt = 0;
    for (const auto& [sj, vj] : values) {
      if (std::abs(sj - s) <= 0.5 * span) {
        sum += vj;
        ++cnt;
      }
    }
    out.emplace_back(s, cnt ? sum / cnt : values[i].second);
  }
  return out;
}

}  // namespace dynhaz
