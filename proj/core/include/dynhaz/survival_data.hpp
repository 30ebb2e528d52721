#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dynhaz/kernel.hpp"

namespace dynhaz {

// One follow-up record: time on study and whether the endpoint was
// observed (status 1) or censored (status 0).
struct Observation {
  double time = 0;
  int status = 0;
};

struct CsvColumns {
  std::string time = "time";
  std::string status = "status";
};

// Immutable sorted sample of censored observations on [0, horizon].
//
// Conventions used throughout:
//   - the at-risk count Y(t) = #{x_i >= t} is left-continuous,
//   - event counts over an interval (a, b] are half-open, so that a
//     uniform-kernel window reproduces increments of the cumulative
//     hazard estimate exactly,
//   - tied times are allowed; every observation at a tied time is in the
//     risk set at that time.
//
// All queries are pure reads; a sample can be shared freely across
// threads.
class SurvivalSample {
 public:
  static SurvivalSample from_observations(std::vector<Observation> obs,
                                          double horizon = 0.0);

  // CSV with a header row. Column names configurable, default time,status.
  static SurvivalSample ingest_csv(const std::string& path,
                                   const CsvColumns& columns = {},
                                   double horizon = 0.0);

  std::string to_json_string() const;
  static SurvivalSample from_json_string(const std::string& json);

  int size() const { return static_cast<int>(times_.size()); }
  double horizon() const { return horizon_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<int>& statuses() const { return statuses_; }
  int total_failures() const;

  // Y(t) = #{x_i >= t}
  int at_risk(double t) const;

  // failures with time in (a, b]
  int event_count(double a, double b) const;

  // int_a^b w(t) Y(t) dt. Exact between order statistics; the weight is
  // integrated with an adaptive rule (use exposure_const / kernel_exposure
  // for the exact closed-form paths).
  double exposure(const std::function<double(double)>& weight, double a, double b,
                  double tol = 1e-12) const;

  // int_a^b Y(t) dt, exact
  double exposure_const(double a, double b) const;

  // int K((t-s)/h) Y(t) dt over (window cap [a,b]), exact for polynomial kernels
  double kernel_exposure(const Kernel& kernel, double s, double h, double a,
                         double b) const;

  // Maximal intervals (lo, hi] subdividing (a, b] on which Y is constant.
  struct RiskSegment {
    double lo, hi;
    int y;
  };
  void for_each_risk_segment(double a, double b,
                             const std::function<void(const RiskSegment&)>& fn) const;

 private:
  std::vector<double> times_;    // ascending
  std::vector<int> statuses_;
  std::vector<int> failure_prefix_;  // failures among the first i observations
  double horizon_ = 0;
};

}  // namespace dynhaz
