#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynhaz/fit.hpp"
#include "dynhaz/hazard_family.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

// Interval goodness-of-fit statistics for a parametric hazard fitted on
// [a, b]. ks_1p weights the martingale residual path by the score (one
// parameter only); ks_const / ks_multi use the plain
// N[a,t] - int Y alpha-hat path normalized by the event count; cvm and l1
// integrate the squared / absolute path against dN.
enum class GofKind { ks_1p, ks_const, ks_multi, cvm, l1 };

GofKind gof_kind_from_name(const std::string& name);
std::string to_string(GofKind kind);

// Residual-process path over [a, b]; the supremum of |path| over the
// interval is attained on the stored points (every failure time and its
// left limit, plus both endpoints), because the path only jumps upward at
// failures and drifts downward in between.
struct DnPath {
  double a = 0, b = 0;
  int n = 0;      // sample size
  int n_ab = 0;   // failures in (a, b]
  std::vector<double> eval_points;
  std::vector<double> values;       // raw path N[a,t] - Lambda(t) at eval_points
  std::vector<double> values_1p;    // score-weighted raw path (dim 1 families only)
  std::vector<double> event_values; // raw path at each failure (post-jump, ties together)
  double tau2_raw = 0;              // int_a^b Y psi^2 alpha-hat du (dim 1 only)
  FitResult fit;
};

// Fits the family on [a, b] (unless a converged fit is supplied) and
// evaluates the residual path. The compensator uses the closed-form shape
// antiderivative, so the whole path costs O(m log m) in the number of
// observations at risk.
DnPath dn_path(const SurvivalSample& sample, const HazardFamily& family, double a,
               double b, const FitResult* precomputed_fit = nullptr);

struct GofDecision {
  double statistic = 0;
  GofKind kind = GofKind::ks_const;
  double threshold = 0;
  double level = 0.10;
  bool reject = false;
};

// Only the tabulated 10% and 5% levels are supported; threshold_override
// substitutes an experimental rejection limit while keeping the bookkeeping.
GofDecision gof_statistic(const DnPath& path, GofKind kind, double level,
                          std::optional<double> threshold_override = {});

double gof_threshold(GofKind kind, double level);

// Window-expansion bandwidth choice at s: scan h_grid upward from the
// smallest window holding min_events failures and stop just before the
// first rejection. No rejection at all yields the full-range sentinel
// (trust the parametric fit globally).
struct WindowChoice {
  double h = 0;
  bool full_range = false;
  GofDecision at_stop;   // decision that stopped the scan (or last accept)
  int windows_tested = 0;
};

WindowChoice expand_window(const SurvivalSample& sample, const std::string& family,
                           double s, GofKind kind, double level, int min_events,
                           const std::vector<double>& h_grid);

// Geometric window grid (ratio 1.15) from the smallest feasible width to
// the width covering [0, horizon] from s.
std::vector<double> default_h_grid(const SurvivalSample& sample, double s,
                                   int min_events, double ratio = 1.15);

// Startup policy: expand [0, b] until the model is rejected, then step
// back to b0 = shrink * b_reject and fit there. Used for grid points whose
// window would spill over the left end of the observation period; the
// mirrored variant handles the right end.
struct StartupResult {
  double b0 = 0;
  bool full_range = false;  // never rejected: b0 is the whole range
  double anchor = 0;        // anchor of the local family used for the fit
  FitResult fit;
};

StartupResult startup_interval(const SurvivalSample& sample, const std::string& family,
                               GofKind kind, double level, int min_events,
                               double shrink = 0.9);

StartupResult startup_interval_mirrored(const SurvivalSample& sample,
                                        const std::string& family, GofKind kind,
                                        double level, int min_events,
                                        double shrink = 0.9);

}  // namespace dynhaz
