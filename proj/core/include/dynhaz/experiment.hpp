#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynhaz/local_fit.hpp"
#include "dynhaz/truths.hpp"

namespace dynhaz {

// One estimator entry of a Monte Carlo comparison: either a dynamic local
// likelihood fit of a named family, or the kernel-smoothed cumulative
// hazard derivative as the nonparametric baseline.
struct EstimatorConfig {
  std::string label;
  enum class Type { dynamic, smoothed_na } type = Type::dynamic;
  std::string family = "constant";
  std::string kernel = "uniform";
  BandwidthPlan bandwidth = BandwidthPlan::fixed(0.5);
  int min_events = 10;
};

struct Experiment {
  Truth truth = {"constant", {1.0}};
  std::optional<Truth> censoring;
  double horizon = 1.0;
  int n = 100;
  int replications = 1;
  std::uint64_t seed = 1;
  std::vector<double> grid;
  std::string weight = "one";  // integrated-error weight: "one" | "y45"
  std::vector<EstimatorConfig> estimators;
  int threads = 0;
};

// bias/variance/mse cell per (estimator, grid point), with the delta-method
// theory columns computed from the true law
struct McCell {
  double mean = 0;
  double bias = 0;
  double variance = 0;  // population variance over successful replications
  double mse = 0;       // = bias^2 + variance identically
  double bias_theory = 0;
  double var_theory = 0;
  int failures = 0;
};

struct McReport {
  Experiment config;
  std::vector<std::string> estimator_labels;
  std::vector<double> grid;
  std::vector<std::vector<McCell>> cells;          // [estimator][grid point]
  std::vector<double> integrated_wmse;             // mean of per-rep weighted ISE
  std::vector<double> integrated_se;               // MC standard error of the mean
  std::vector<std::vector<double>> ise_per_rep;    // [estimator][rep], NaN on failure

  std::string to_json_string() const;
  static McReport from_json_string(const std::string& json);
  std::string to_csv_long() const;  // estimator, s, metric, value
};

McReport run_experiment(const Experiment& exp);

enum class Improvement { better, worse, indeterminate };

struct ImprovementPoint {
  double s = 0;
  double ratio = 0;  // the criterion's middle expression
  Improvement flag = Improvement::indeterminate;
};

// Where the dynamic fit of the tagged family beats the plain smoother for
// every kernel and bandwidth: the criterion ratio must land in [0, 2]
// (multi-parameter families), [0, 1] for the frailty form, and
// [0, 1] for the locally constant fit without censoring. Grid points with
// vanishing curvature are indeterminate.
std::vector<ImprovementPoint> improvement_region(const Truth& truth, FamilyTag tag,
                                                 const std::vector<double>& grid);

struct RankingRow {
  std::string label;
  double integrated_wmse = 0;
  double se = 0;
  int rank = 0;
  int wins = 0;    // pairwise, significant at 2 MC standard errors
  int losses = 0;
  int ties = 0;
};

struct Ranking {
  std::vector<RankingRow> rows;  // sorted best first
  std::string to_csv() const;
};

Ranking compare_estimators(const McReport& report);

}  // namespace dynhaz
