#include "dynhaz/survival_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dynhaz/error.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

SurvivalSample SurvivalSample::from_observations(std::vector<Observation> obs,
                                                 double horizon) {
  if (obs.empty()) throw Error("empty sample");
  for (const auto& o : obs) {
    if (!(o.time >= 0) || !std::isfinite(o.time)) throw Error("negative time");
    if (o.status != 0 && o.status != 1) throw Error("status must be 0 or 1");
  }
  std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.status > b.status;
  });
  SurvivalSample s;
  s.times_.reserve(obs.size());
  s.statuses_.reserve(obs.size());
  s.failure_prefix_.reserve(obs.size() + 1);
  s.failure_prefix_.push_back(0);
  for (const auto& o : obs) {
    s.times_.push_back(o.time);
    s.statuses_.push_back(o.status);
    s.failure_prefix_.push_back(s.failure_prefix_.back() + o.status);
  }
  s.horizon_ = horizon > 0 ? horizon : s.times_.back();
  if (s.times_.back() > s.horizon_)
    throw Error("observation beyond horizon: " + std::to_string(s.times_.back()));
  return s;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    *out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

SurvivalSample SurvivalSample::ingest_csv(const std::string& path,
                                          const CsvColumns& columns, double horizon) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty file: " + path);
  const auto header = split_csv_line(line);
  int time_col = -1, status_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == columns.time) time_col = static_cast<int>(i);
    if (header[i] == columns.status) status_col = static_cast<int>(i);
  }
  if (time_col < 0) throw Error("missing column '" + columns.time + "' in " + path);
  if (status_col < 0) throw Error("missing column '" + columns.status + "' in " + path);

  std::vector<Observation> obs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) <= std::max(time_col, status_col))
      throw Error("malformed row at line " + std::to_string(line_no));
    double t = 0, st = 0;
    if (!parse_double(fields[time_col], &t) || !parse_double(fields[status_col], &st))
      throw Error("malformed row at line " + std::to_string(line_no));
    if (t < 0) throw Error("negative time at line " + std::to_string(line_no));
    if (st != 0.0 && st != 1.0)
      throw Error("status must be 0 or 1 at line " + std::to_string(line_no));
    obs.push_back({t, static_cast<int>(st)});
  }
  if (obs.empty()) throw Error("empty file: no data rows in " + path);
  return from_observations(std::move(obs), horizon);
}

std::string SurvivalSample::to_json_string() const {
  nlohmann::json j;
  j["horizon"] = horizon_;
  auto& rows = j["observations"];
  rows = nlohmann::json::array();
  for (std::size_t i = 0; i < times_.size(); ++i)
    rows.push_back({times_[i], statuses_[i]});
  return j.dump();
}

SurvivalSample SurvivalSample::from_json_string(const std::string& json) {
  const auto j = nlohmann::json::parse(json);
  std::vector<Observation> obs;
  for (const auto& row : j.at("observations"))
    obs.push_back({row.at(0).get<double>(), row.at(1).get<int>()});
  return from_observations(std::move(obs), j.at("horizon").get<double>());
}

int SurvivalSample::total_failures() const { return failure_prefix_.back(); }

int SurvivalSample::at_risk(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  return static_cast<int>(times_.end() - it);
}

int SurvivalSample::event_count(double a, double b) const {
  if (a > b) throw Error("event_count: a > b");
  const auto ia = std::upper_bound(times_.begin(), times_.end(), a) - times_.begin();
  const auto ib = std::upper_bound(times_.begin(), times_.end(), b) - times_.begin();
  return failure_prefix_[ib] - failure_prefix_[ia];
}

void SurvivalSample::for_each_risk_segment(
    double a, double b, const std::function<void(const RiskSegment&)>& fn) const {
  if (!(b > a)) return;
  double lo = a;
  auto it = std::upper_bound(times_.begin(), times_.end(), a);
  while (lo < b) {
    double hi = b;
    while (it != times_.end() && *it <= lo) ++it;
    if (it != times_.end() && *it < b) hi = *it;
    // Y is constant on (lo, hi]: everyone with x > lo is at risk there
    const int y = static_cast<int>(times_.end() -
                                   std::upper_bound(times_.begin(), times_.end(), lo));
    if (hi > lo) fn({lo, hi, y});
    lo = hi;
    if (it != times_.end() && *it == hi) ++it;
  }
}

double SurvivalSample::exposure(const std::function<double(double)>& weight, double a,
                                double b, double tol) const {
  if (a > b) throw Error("exposure: a > b");
  double total = 0.0;
  for_each_risk_segment(a, b, [&](const RiskSegment& seg) {
    if (seg.y == 0) return;
    total += seg.y * adaptive_quad(weight, seg.lo, seg.hi, tol);
  });
  return total;
}

double SurvivalSample::exposure_const(double a, double b) const {
  if (a > b) throw Error("exposure: a > b");
  double total = 0.0;
  for_each_risk_segment(a, b, [&](const RiskSegment& seg) {
    total += seg.y * (seg.hi - seg.lo);
  });
  return total;
}

double SurvivalSample::kernel_exposure(const Kernel& kernel, double s, double h,
                                       double a, double b) const {
  if (a > b) throw Error("exposure: a > b");
  double total = 0.0;
  for_each_risk_segment(a, b, [&](const RiskSegment& seg) {
    if (seg.y == 0) return;
    total += seg.y * h * kernel.integral((seg.lo - s) / h, (seg.hi - s) / h);
  });
  return total;
}

}  // namespace dynhaz
