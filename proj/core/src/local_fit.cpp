#include "dynhaz/local_fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "dynhaz/error.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

namespace {

int window_events(const SurvivalSample& sample, double s, double h) {
  const double lo = s - 0.5 * h;
  const double hi = std::min(s + 0.5 * h, sample.horizon());
  if (hi <= lo) return 0;
  return sample.event_count(lo, hi);
}

// deterministic slot-based parallel loop
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned want =
      threads > 0 ? static_cast<unsigned>(threads) : hw;
  const unsigned k = std::min<unsigned>(want, static_cast<unsigned>(count));
  if (k <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (unsigned t = 0; t < k; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace

LocalPointFit fit_local_at(const SurvivalSample& sample, const std::string& family,
                           const Kernel& kernel, double s, double h, int min_events) {
  if (!(h > 0)) throw Error("bandwidth must be positive");
  const int events = window_events(sample, s, h);
  if (events < std::max(min_events, 1))
    throw Error("insufficient window: " + std::to_string(events) + " events at s=" +
                std::to_string(s));
  const auto fam = make_local_family(family, s);
  LocalPointFit out;
  out.fit = fit_kernel_window(sample, *fam, kernel, s, h);
  if (!out.fit.converged)
    throw Error("local fit did not converge at s=" + std::to_string(s) +
                " (residual " + std::to_string(out.fit.score_residual) + ")");
  out.theta = out.fit.theta;
  out.alpha_hat = fam->hazard(s, out.theta);
  const int y = sample.at_risk(s);
  out.se = y > 0 ? std::sqrt(kernel.constants().gamma_k * out.alpha_hat / (h * y))
                 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double local_constant(const SurvivalSample& sample, const Kernel& kernel, double s,
                      double h) {
  if (!(h > 0)) throw Error("bandwidth must be positive");
  const double lo = s - 0.5 * h, hi = s + 0.5 * h;
  if (std::min(hi, sample.horizon()) <= std::max(lo, 0.0))
    throw Error("insufficient window: no overlap with the data range at s=" +
                std::to_string(s));
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  double num = 0;
  auto it = std::upper_bound(times.begin(), times.end(), lo);
  for (; it != times.end() && *it <= hi; ++it) {
    const auto i = static_cast<std::size_t>(it - times.begin());
    if (!status[i]) continue;
    num += kernel(std::clamp((*it - s) / h, -0.5, 0.5));
  }
  const double den = sample.kernel_exposure(kernel, s, h, std::max(lo, 0.0),
                                            std::min(hi, sample.horizon()));
  if (!(den > 0)) throw Error("insufficient window: zero exposure at s=" +
                              std::to_string(s));
  return num / den;
}

std::string to_string(PointFlag flag) {
  switch (flag) {
    case PointFlag::ok: return "ok";
    case PointFlag::startup: return "startup";
    case PointFlag::mirrored: return "mirrored";
    case PointFlag::full_range: return "full_range";
    case PointFlag::insufficient_window: return "insufficient_window";
    case PointFlag::not_converged: return "not_converged";
    case PointFlag::zero_risk: return "zero_risk";
  }
  return "?";
}

namespace {

struct EndPolicy {
  bool ready = false;
  StartupResult result;
  std::unique_ptr<HazardFamily> fam;
};

constexpr double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

HazardCurve estimate_curve(const SurvivalSample& sample, const LocalFitSpec& spec) {
  if (spec.grid.empty()) throw Error("empty evaluation grid");
  const double horizon = sample.horizon();
  for (double s : spec.grid)
    if (s < 0 || s > horizon) throw Error("grid point outside [0, horizon]");

  HazardCurve curve;
  curve.family = spec.family;
  curve.kernel = spec.kernel.name();
  curve.bandwidth = spec.bandwidth.to_string();
  curve.points.resize(spec.grid.size());

  const std::size_t m = spec.grid.size();
  const bool gof_plan = spec.bandwidth.kind == BandwidthPlan::Kind::gof;

  // resolve per-point bandwidths
  std::vector<double> h_of(m, 0.0);
  std::vector<bool> full_range_at(m, false);
  if (gof_plan) {
    std::vector<WindowChoice> choices(m);
    std::vector<std::string> errors(m);
    parallel_for(m, spec.threads, [&](std::size_t i) {
      try {
        const auto grid_h = default_h_grid(sample, spec.grid[i], spec.min_events);
        choices[i] = expand_window(sample, spec.family, spec.grid[i], spec.gof_kind,
                                   spec.gof_level, spec.min_events, grid_h);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    std::vector<std::pair<double, double>> series;
    for (std::size_t i = 0; i < m; ++i) {
      if (!errors[i].empty()) {
        h_of[i] = nan_value();
        continue;
      }
      full_range_at[i] = choices[i].full_range;
      const double h_full =
          2.0 * std::max(spec.grid[i], horizon - spec.grid[i]);
      h_of[i] = choices[i].full_range ? h_full : choices[i].h;
    }
    if (spec.smooth_gof_h) {
      for (std::size_t i = 0; i < m; ++i)
        if (std::isfinite(h_of[i])) series.emplace_back(spec.grid[i], h_of[i]);
      const double span = spec.gof_h_span > 0
                              ? spec.gof_h_span
                              : (spec.grid.back() - spec.grid.front()) / 8.0;
      const auto smooth = post_smooth(series, span);
      std::size_t j = 0;
      for (std::size_t i = 0; i < m && j < smooth.size(); ++i) {
        if (!std::isfinite(h_of[i])) continue;
        h_of[i] = smooth[j++].second;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      h_of[i] = spec.bandwidth.h_at(sample, spec.grid[i]);
  }

  // end policies and the full-range fit are shared across points and
  // computed at most once
  EndPolicy left, right;
  FitResult global_fit;
  std::unique_ptr<HazardFamily> global_fam;
  std::mutex ends_mutex;
  auto ensure_left = [&]() -> EndPolicy& {
    std::lock_guard<std::mutex> lock(ends_mutex);
    if (!left.ready) {
      left.result = startup_interval(sample, spec.family, spec.gof_kind,
                                     spec.gof_level, spec.min_events);
      left.fam = make_local_family(spec.family, left.result.anchor);
      left.ready = true;
    }
    return left;
  };
  auto ensure_right = [&]() -> EndPolicy& {
    std::lock_guard<std::mutex> lock(ends_mutex);
    if (!right.ready) {
      right.result = startup_interval_mirrored(sample, spec.family, spec.gof_kind,
                                               spec.gof_level, spec.min_events);
      right.fam = make_local_family(spec.family, right.result.anchor);
      right.ready = true;
    }
    return right;
  };
  auto ensure_global = [&]() -> const FitResult& {
    std::lock_guard<std::mutex> lock(ends_mutex);
    if (!global_fam) {
      const double anchor = spec.family == "weibull" ? 0.5 * horizon : 0.0;
      global_fam = make_local_family(spec.family, anchor);
      global_fit = fit_interval_mle(sample, *global_fam, 0.0, horizon);
    }
    return global_fit;
  };

  const double gamma_k = spec.kernel.constants().gamma_k;
  const double beta_k = spec.kernel.constants().beta_k;

  // pilot for the optional band bias correction
  std::unique_ptr<PilotEstimate> pilot;
  std::unique_ptr<PilotEstimate> pilot_total;
  if (spec.band_bias_correction) {
    pilot = std::make_unique<PilotEstimate>(sample, PilotConfig{});
    std::vector<Observation> all;
    for (std::size_t i = 0; i < sample.times().size(); ++i)
      all.push_back({sample.times()[i], 1});
    const SurvivalSample flat = SurvivalSample::from_observations(std::move(all), horizon);
    pilot_total = std::make_unique<PilotEstimate>(flat, PilotConfig{});
  }

  parallel_for(m, spec.threads, [&](std::size_t i) {
    CurvePoint& pt = curve.points[i];
    const double s = spec.grid[i];
    pt.s = s;
    const double h = h_of[i];
    pt.h_used = h;
    if (!std::isfinite(h)) {
      pt.flag = PointFlag::insufficient_window;
      pt.alpha_hat = pt.se = pt.band_lo = pt.band_hi = nan_value();
      return;
    }

    try {
      const double y = sample.at_risk(s);
      if (gof_plan && full_range_at[i]) {
        const FitResult& fit = ensure_global();
        pt.theta_local = fit.theta;
        pt.alpha_hat = global_fam->hazard(s, fit.theta);
        pt.flag = PointFlag::full_range;
        pt.se = y > 0 ? std::sqrt(gamma_k * pt.alpha_hat / (h * y)) : nan_value();
      } else if (s < 0.5 * h) {
        const EndPolicy& pol = ensure_left();
        pt.theta_local = pol.result.fit.theta;
        pt.alpha_hat = pol.fam->hazard(s, pol.result.fit.theta);
        pt.flag = PointFlag::startup;
        pt.h_used = pol.result.b0;
        pt.se = y > 0 ? std::sqrt(gamma_k * pt.alpha_hat / (pol.result.b0 * y))
                      : nan_value();
      } else if (s > horizon - 0.5 * h) {
        const EndPolicy& pol = ensure_right();
        pt.theta_local = pol.result.fit.theta;
        pt.alpha_hat = pol.fam->hazard(s, pol.result.fit.theta);
        pt.flag = PointFlag::mirrored;
        pt.h_used = pol.result.b0;
        pt.se = y > 0 ? std::sqrt(gamma_k * pt.alpha_hat / (pol.result.b0 * y))
                      : nan_value();
      } else {
        const LocalPointFit lf =
            fit_local_at(sample, spec.family, spec.kernel, s, h, spec.min_events);
        pt.theta_local = lf.theta;
        pt.alpha_hat = lf.alpha_hat;
        pt.se = lf.se;
        pt.flag = PointFlag::ok;
      }
    } catch (const Error& e) {
      const std::string what = e.what();
      pt.flag = what.find("insufficient window") != std::string::npos ||
                        what.find("empty window") != std::string::npos
                    ? PointFlag::insufficient_window
                    : PointFlag::not_converged;
      pt.alpha_hat = pt.se = pt.band_lo = pt.band_hi = nan_value();
      return;
    }

    double correction = 0.0;
    if (spec.band_bias_correction && pilot && pilot->in_range(s)) {
      const double b_hat =
          bias_factor(family_tag_from_name(spec.family), std::max(pilot->value(s), 1e-12),
                      pilot->d1(s), pilot->d2(s), 1.0, -pilot_total->value(s), s);
      correction = 0.5 * beta_k * pt.h_used * pt.h_used * b_hat;
    }
    if (std::isfinite(pt.se)) {
      const auto band = pointwise_band(pt.alpha_hat, pt.se, spec.band_level, correction);
      pt.band_lo = band.first;
      pt.band_hi = band.second;
    } else {
      pt.band_lo = pt.band_hi = nan_value();
      pt.flag = pt.flag == PointFlag::ok ? PointFlag::zero_risk : pt.flag;
    }
  });

  if (spec.post_smooth_shape && family_dim(spec.family) == 2) {
    // smooth the noisy local shape across the grid, then re-solve the level
    // with the shape pinned (closed form)
    std::vector<std::pair<double, double>> series;
    for (const auto& pt : curve.points)
      if (pt.flag == PointFlag::ok && pt.theta_local.size() == 2)
        series.emplace_back(pt.s, pt.theta_local[1]);
    const double span = spec.shape_span > 0
                            ? spec.shape_span
                            : (spec.grid.back() - spec.grid.front()) / 8.0;
    const auto smooth = post_smooth(series, span);
    std::size_t j = 0;
    for (auto& pt : curve.points) {
      if (!(pt.flag == PointFlag::ok && pt.theta_local.size() == 2)) continue;
      const double beta = smooth[j++].second;
      const auto fam = make_local_family(spec.family, pt.s);
      const double lo = pt.s - 0.5 * pt.h_used, hi = pt.s + 0.5 * pt.h_used;
      const auto& times = sample.times();
      const auto& status = sample.statuses();
      double nw = 0;
      auto it = std::upper_bound(times.begin(), times.end(), lo);
      for (; it != times.end() && *it <= hi; ++it) {
        const auto i = static_cast<std::size_t>(it - times.begin());
        if (status[i])
          nw += spec.kernel(std::clamp((times[i] - pt.s) / pt.h_used, -0.5, 0.5));
      }
      double dw = 0;
      sample.for_each_risk_segment(
          std::max(lo, 0.0), std::min(hi, horizon),
          [&](const SurvivalSample::RiskSegment& seg) {
            if (seg.y == 0) return;
            dw += seg.y * adaptive_quad(
                              [&](double t) {
                                return spec.kernel(std::clamp(
                                           (t - pt.s) / pt.h_used, -0.5, 0.5)) *
                                       fam->gamma(t, beta);
                              },
                              seg.lo, seg.hi, 1e-12);
          });
      if (!(dw > 0)) continue;
      pt.theta_local[1] = beta;
      pt.theta_local[0] = nw / dw;
      pt.alpha_hat = pt.theta_local[0];
      const int y = sample.at_risk(pt.s);
      pt.se = y > 0 ? std::sqrt(gamma_k * pt.alpha_hat / (pt.h_used * y)) : pt.se;
      if (std::isfinite(pt.se)) {
        const auto band = pointwise_band(pt.alpha_hat, pt.se, spec.band_level, 0.0);
        pt.band_lo = band.first;
        pt.band_hi = band.second;
      }
    }
  }

  return curve;
}

double bias_factor(FamilyTag tag, double alpha, double alpha_d1, double alpha_d2,
                   double y, double y_d1, double s) {
  if (!(alpha > 0)) throw Error("bias factor needs alpha > 0");
  switch (tag) {
    case FamilyTag::constant: {
      if (!(y > 0)) throw Error("bias factor needs y > 0");
      return alpha_d2 + 2.0 * alpha_d1 * (y_d1 / y);
    }
    case FamilyTag::gompertz:
      return alpha_d2 - alpha_d1 * alpha_d1 / alpha;
    case FamilyTag::weibull:
      if (s == 0.0) throw Error("weibull bias factor undefined at s = 0");
      return alpha_d2 - alpha_d1 * alpha_d1 / alpha + alpha_d1 / s;
    case FamilyTag::frailty:
      return alpha_d2 - 2.0 * alpha_d1 * alpha_d1 / alpha;
    case FamilyTag::generic:
      throw Error("generic tag needs bias_factor_generic");
  }
  throw Error("unknown family tag");
}

double bias_factor_generic(const HazardFamily& fam, const std::vector<double>& theta0,
                           double alpha, double alpha_d1, double alpha_d2, double y,
                           double y_d1, double s) {
  if (fam.dim() != 1) throw Error("generic bias factor is for one-parameter families");
  if (!(alpha > 0) || !(y > 0)) throw Error("bias factor needs alpha, y > 0");
  std::span<const double> th(theta0);
  const double eps = 1e-5 * (1.0 + std::abs(s));
  auto a0 = [&](double t) { return fam.hazard(t, th); };
  auto psi0 = [&](double t) {
    std::vector<double> ps(1);
    fam.score(t, th, ps);
    return ps[0];
  };
  const double a0_d1 = (a0(s + eps) - a0(s - eps)) / (2.0 * eps);
  const double a0_d2 = (a0(s + eps) - 2.0 * a0(s) + a0(s - eps)) / (eps * eps);
  const double psi_d1 = (psi0(s + eps) - psi0(s - eps)) / (2.0 * eps);
  const double psi_v = psi0(s);
  if (psi_v == 0.0) throw Error("score vanishes at s");
  return alpha_d2 - a0_d2 +
         2.0 * (alpha_d1 - a0_d1) * (y_d1 / y + psi_d1 / psi_v);
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw Error("quantile needs p in (0,1)");
  // rational initializer (Acklam) polished by one Halley step on erfc
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) *
                   std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

std::pair<double, double> pointwise_band(double alpha_hat, double se, double level,
                                         double bias_correction) {
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double center = alpha_hat - bias_correction;
  return {center - z * se, center + z * se};
}

std::vector<std::pair<double, double>> density_estimates(const HazardCurve& curve,
                                                         const std::string& family,
                                                         DensityMode mode) {
  std::vector<std::pair<double, double>> out;
  out.reserve(curve.points.size());
  if (mode == DensityMode::plug_in) {
    for (const auto& pt : curve.points) {
      if (!pt.usable()) {
        out.emplace_back(pt.s, nan_value());
        continue;
      }
      const auto fam =
          make_local_family(family, family == "weibull" && pt.s <= 0 ? 1e-12 : pt.s);
      const double cum = fam->cumulative(pt.s, pt.theta_local);
      out.emplace_back(pt.s, pt.alpha_hat * std::exp(-cum));
    }
    return out;
  }
  // product-integral form needs the grid to reach back to 0
  if (curve.points.empty() || curve.points.front().s > 1e-8)
    throw Error("density grid must start at 0");
  double cum = 0.0;
  double prev_s = curve.points.front().s;
  double prev_a = curve.points.front().alpha_hat;
  for (const auto& pt : curve.points) {
    if (!pt.usable()) {
      out.emplace_back(pt.s, nan_value());
      continue;
    }
    cum += 0.5 * (prev_a + pt.alpha_hat) * (pt.s - prev_s);
    prev_s = pt.s;
    prev_a = pt.alpha_hat;
    out.emplace_back(pt.s, pt.alpha_hat * std::exp(-cum));
  }
  return out;
}

}  // namespace dynhaz
