#include "dynhaz/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include <json.hpp>

#include "dynhaz/error.hpp"
#include "dynhaz/nelson_aalen.hpp"

namespace dynhaz {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void parallel_reps(std::size_t count, int threads,
                   const std::function<void(std::size_t)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned k = std::min<unsigned>(
      threads > 0 ? static_cast<unsigned>(threads) : hw,
      static_cast<unsigned>(count));
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

// family bias-factor tag of an estimator ("generic" = plain smoother, so
// the curvature itself)
double theory_bias_factor(const Experiment& exp, const EstimatorConfig& est,
                          double s) {
  const double a = exp.truth.alpha(s);
  const double d1 = exp.truth.alpha_d1(s);
  const double d2 = exp.truth.alpha_d2(s);
  if (est.type == EstimatorConfig::Type::smoothed_na) return d2;
  const FamilyTag tag = family_tag_from_name(est.family);
  if (tag == FamilyTag::constant) {
    const double slope = at_risk_log_slope(exp.truth, exp.censoring, s);
    return d2 + 2.0 * d1 * slope;
  }
  if (tag == FamilyTag::gompertz) return d2 - d1 * d1 / a;
  if (tag == FamilyTag::weibull) return s > 0 ? d2 - d1 * d1 / a + d1 / s : kNan;
  if (tag == FamilyTag::frailty) return d2 - 2.0 * d1 * d1 / a;
  return kNan;
}

}  // namespace

McReport run_experiment(const Experiment& exp) {
  if (exp.replications < 1) throw Error("replications must be >= 1");
  if (exp.estimators.empty()) throw Error("experiment needs estimators");
  if (exp.grid.empty()) throw Error("experiment needs a grid");

  const std::size_t ne = exp.estimators.size();
  const std::size_t m = exp.grid.size();
  const std::size_t reps = static_cast<std::size_t>(exp.replications);
  const SimulationLaw law = make_law(exp.truth, exp.censoring, exp.horizon, exp.seed);

  std::vector<Kernel> kernels;
  for (const auto& est : exp.estimators) kernels.push_back(Kernel::from_name(est.kernel));

  // values[rep][estimator][point]
  std::vector<std::vector<std::vector<double>>> values(
      reps, std::vector<std::vector<double>>(ne, std::vector<double>(m, kNan)));

  parallel_reps(reps, exp.threads, [&](std::size_t rep) {
    const SurvivalSample sample = simulate_replicate(law, exp.n, rep);
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& est = exp.estimators[e];
      try {
        BandwidthPlan plan = est.bandwidth;
        if (plan.kind == BandwidthPlan::Kind::plugin && !plan.resolved)
          plan = plugin_global_c(sample, kernels[e],
                                 est.type == EstimatorConfig::Type::smoothed_na
                                     ? FamilyTag::generic
                                     : family_tag_from_name(est.family),
                                 plan.pilot);
        if (est.type == EstimatorConfig::Type::smoothed_na) {
          for (std::size_t j = 0; j < m; ++j) {
            const double h = plan.h_at(sample, exp.grid[j]);
            values[rep][e][j] = smoothed_hazard(sample, kernels[e], h, exp.grid[j]);
          }
        } else {
          LocalFitSpec spec;
          spec.family = est.family;
          spec.kernel = kernels[e];
          spec.bandwidth = plan;
          spec.grid = exp.grid;
          spec.min_events = est.min_events;
          spec.threads = 1;
          const HazardCurve curve = estimate_curve(sample, spec);
          for (std::size_t j = 0; j < m; ++j)
            values[rep][e][j] = curve.points[j].usable() ? curve.points[j].alpha_hat
                                                         : kNan;
        }
      } catch (const Error&) {
        // whole replication flagged for this estimator
        for (std::size_t j = 0; j < m; ++j) values[rep][e][j] = kNan;
      }
    }
  });

  McReport report;
  report.config = exp;
  report.grid = exp.grid;
  for (const auto& est : exp.estimators) report.estimator_labels.push_back(est.label);
  report.cells.assign(ne, std::vector<McCell>(m));
  report.ise_per_rep.assign(ne, std::vector<double>(reps, kNan));
  report.integrated_wmse.assign(ne, kNan);
  report.integrated_se.assign(ne, kNan);

  std::vector<double> wgrid(m, 1.0);
  if (exp.weight == "y45")
    for (std::size_t j = 0; j < m; ++j)
      wgrid[j] = std::pow(at_risk_limit(exp.truth, exp.censoring, exp.grid[j]), 0.8);

  for (std::size_t e = 0; e < ne; ++e) {
    const auto& est = exp.estimators[e];
    for (std::size_t j = 0; j < m; ++j) {
      McCell& cell = report.cells[e][j];
      const double s = exp.grid[j];
      const double truth = exp.truth.alpha(s);
      double sum = 0;
      int ok = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const double v = values[rep][e][j];
        if (std::isfinite(v)) {
          sum += v;
          ++ok;
        } else {
          ++cell.failures;
        }
      }
      if (ok > 0) {
        cell.mean = sum / ok;
        cell.bias = cell.mean - truth;
        double ss = 0, mse = 0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const double v = values[rep][e][j];
          if (!std::isfinite(v)) continue;
          ss += (v - cell.mean) * (v - cell.mean);
          mse += (v - truth) * (v - truth);
        }
        cell.variance = ss / ok;
        cell.mse = mse / ok;
      } else {
        cell.mean = cell.bias = cell.variance = cell.mse = kNan;
      }
      // theory columns: only when the bandwidth at s is deterministic
      const double y = at_risk_limit(exp.truth, exp.censoring, s);
      double h_theory = kNan;
      if (est.bandwidth.kind == BandwidthPlan::Kind::fixed)
        h_theory = est.bandwidth.h_fixed;
      else if (est.bandwidth.kind == BandwidthPlan::Kind::adaptive ||
               (est.bandwidth.kind == BandwidthPlan::Kind::plugin &&
                est.bandwidth.resolved))
        h_theory = est.bandwidth.c * std::pow(exp.n * y, -0.2);
      const auto& kc = kernels[e].constants();
      if (std::isfinite(h_theory)) {
        cell.var_theory = kc.gamma_k / (exp.n * h_theory) * truth / y;
        const double b = theory_bias_factor(exp, est, s);
        cell.bias_theory = 0.5 * kc.beta_k * h_theory * h_theory * b;
      } else {
        cell.var_theory = cell.bias_theory = kNan;
      }
    }

    // per-replication weighted integrated squared error (trapezoid)
    for (std::size_t rep = 0; rep < reps; ++rep) {
      double ise = 0;
      bool ok = true;
      for (std::size_t j = 0; j + 1 < m; ++j) {
        const double v0 = values[rep][e][j], v1 = values[rep][e][j + 1];
        if (!std::isfinite(v0) || !std::isfinite(v1)) {
          ok = false;
          break;
        }
        const double e0 = v0 - exp.truth.alpha(exp.grid[j]);
        const double e1 = v1 - exp.truth.alpha(exp.grid[j + 1]);
        ise += 0.5 * (wgrid[j] * e0 * e0 + wgrid[j + 1] * e1 * e1) *
               (exp.grid[j + 1] - exp.grid[j]);
      }
      if (m == 1) {
        const double v0 = values[rep][e][0];
        ok = std::isfinite(v0);
        if (ok) {
          const double e0 = v0 - exp.truth.alpha(exp.grid[0]);
          ise = wgrid[0] * e0 * e0;
        }
      }
      report.ise_per_rep[e][rep] = ok ? ise : kNan;
    }
    double sum = 0;
    int ok = 0;
    for (double v : report.ise_per_rep[e])
      if (std::isfinite(v)) {
        sum += v;
        ++ok;
      }
    if (ok > 0) {
      const double mean = sum / ok;
      double ss = 0;
      for (double v : report.ise_per_rep[e])
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
      report.integrated_wmse[e] = mean;
      report.integrated_se[e] = ok > 1 ? std::sqrt(ss / (ok - 1) / ok) : kNan;
    }
  }
  return report;
}

std::vector<ImprovementPoint> improvement_region(const Truth& truth, FamilyTag tag,
                                                 const std::vector<double>& grid) {
  std::vector<ImprovementPoint> out;
  out.reserve(grid.size());
  for (double s : grid) {
    ImprovementPoint pt;
    pt.s = s;
    const double a = truth.alpha(s);
    const double d1 = truth.alpha_d1(s);
    const double d2 = truth.alpha_d2(s);
    const double scale = std::max({std::abs(a), std::abs(d1), 1.0});
    if (std::abs(d2) < 1e-12 * scale) {
      pt.flag = Improvement::indeterminate;
      pt.ratio = kNan;
      out.push_back(pt);
      continue;
    }
    double lo = 0.0, hi = 2.0;
    switch (tag) {
      case FamilyTag::gompertz:
        pt.ratio = d1 * d1 / (a * d2);
        break;
      case FamilyTag::weibull:
        pt.ratio = d1 * d1 / (a * d2) - d1 / (s * d2);
        break;
      case FamilyTag::frailty:
        pt.ratio = d1 * d1 / (a * d2);
        hi = 1.0;
        break;
      case FamilyTag::constant:
        // no-censoring form of the locally constant criterion
        pt.ratio = a * d1 / d2;
        hi = 1.0;
        break;
      case FamilyTag::generic:
        throw Error("improvement region needs a concrete family tag");
    }
    pt.flag = (pt.ratio >= lo && pt.ratio <= hi) ? Improvement::better
                                                 : Improvement::worse;
    out.push_back(pt);
  }
  return out;
}

Ranking compare_estimators(const McReport& report) {
  const std::size_t ne = report.estimator_labels.size();
  Ranking ranking;
  ranking.rows.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    ranking.rows[e].label = report.estimator_labels[e];
    ranking.rows[e].integrated_wmse = report.integrated_wmse[e];
    ranking.rows[e].se = report.integrated_se[e];
  }
  // paired comparisons on the shared replication stream
  for (std::size_t e1 = 0; e1 < ne; ++e1)
    for (std::size_t e2 = e1 + 1; e2 < ne; ++e2) {
      double sum = 0, ss = 0;
      int k = 0;
      const auto& a = report.ise_per_rep[e1];
      const auto& b = report.ise_per_rep[e2];
      for (std::size_t r = 0; r < a.size(); ++r) {
        if (!std::isfinite(a[r]) || !std::isfinite(b[r])) continue;
        sum += a[r] - b[r];
        ++k;
      }
      if (k < 2) {
        ++ranking.rows[e1].ties;
        ++ranking.rows[e2].ties;
        continue;
      }
      const double mean = sum / k;
      for (std::size_t r = 0; r < a.size(); ++r) {
        if (!std::isfinite(a[r]) || !std::isfinite(b[r])) continue;
        ss += (a[r] - b[r] - mean) * (a[r] - b[r] - mean);
      }
      const double se = std::sqrt(ss / (k - 1) / k);
      if (mean + 2.0 * se < 0) {
        ++ranking.rows[e1].wins;
        ++ranking.rows[e2].losses;
      } else if (mean - 2.0 * se > 0) {
        ++ranking.rows[e1].losses;
        ++ranking.rows[e2].wins;
      } else {
        ++ranking.rows[e1].ties;
        ++ranking.rows[e2].ties;
      }
    }
  std::stable_sort(ranking.rows.begin(), ranking.rows.end(),
                   [](const RankingRow& x, const RankingRow& y) {
                     return x.integrated_wmse < y.integrated_wmse;
                   });
  for (std::size_t i = 0; i < ranking.rows.size(); ++i)
    ranking.rows[i].rank = static_cast<int>(i) + 1;
  return ranking;
}

std::string Ranking::to_csv() const {
  std::string out = "rank,estimator,integrated_wmse,mc_se,wins,losses,ties\n";
  for (const auto& row : rows) {
    out += std::to_string(row.rank) + "," + row.label + "," +
           fmt(row.integrated_wmse) + "," + fmt(row.se) + "," +
           std::to_string(row.wins) + "," + std::to_string(row.losses) + "," +
           std::to_string(row.ties) + "\n";
  }
  return out;
}

namespace {

// NaN round-trips as JSON null
nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

double num_from(const nlohmann::json& j) {
  return j.is_number() ? j.get<double>() : kNan;
}

nlohmann::json num_array(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> num_array_from(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(num_from(x));
  return v;
}

nlohmann::json truth_to_json(const Truth& t) {
  return {{"name", t.name}, {"params", t.params}};
}

Truth truth_from_json(const nlohmann::json& j) {
  return make_truth(j.at("name").get<std::string>(),
                    j.at("params").get<std::vector<double>>());
}

nlohmann::json estimator_to_json(const EstimatorConfig& e) {
  return {{"label", e.label},
          {"type", e.type == EstimatorConfig::Type::dynamic ? "dynamic" : "smoothed_na"},
          {"family", e.family},
          {"kernel", e.kernel},
          {"bandwidth", e.bandwidth.to_string()},
          {"min_events", e.min_events}};
}

EstimatorConfig estimator_from_json(const nlohmann::json& j) {
  EstimatorConfig e;
  e.label = j.at("label").get<std::string>();
  e.type = j.at("type").get<std::string>() == "smoothed_na"
               ? EstimatorConfig::Type::smoothed_na
               : EstimatorConfig::Type::dynamic;
  e.family = j.value("family", "constant");
  e.kernel = j.value("kernel", "uniform");
  e.bandwidth = BandwidthPlan::parse(j.at("bandwidth").get<std::string>());
  e.min_events = j.value("min_events", 10);
  return e;
}

}  // namespace

std::string McReport::to_json_string() const {
  nlohmann::json j;
  j["truth"] = truth_to_json(config.truth);
  if (config.censoring) j["censoring"] = truth_to_json(*config.censoring);
  j["horizon"] = config.horizon;
  j["n"] = config.n;
  j["replications"] = config.replications;
  j["seed"] = config.seed;
  j["grid"] = grid;
  j["weight"] = config.weight;
  auto& ests = j["estimators"];
  ests = nlohmann::json::array();
  for (const auto& e : config.estimators) ests.push_back(estimator_to_json(e));
  auto& cj = j["cells"];
  cj = nlohmann::json::array();
  for (const auto& row : cells) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row)
      r.push_back({{"mean", num(c.mean)},
                   {"bias", num(c.bias)},
                   {"variance", num(c.variance)},
                   {"mse", num(c.mse)},
                   {"bias_theory", num(c.bias_theory)},
                   {"var_theory", num(c.var_theory)},
                   {"failures", c.failures}});
    cj.push_back(r);
  }
  j["integrated_wmse"] = num_array(integrated_wmse);
  j["integrated_se"] = num_array(integrated_se);
  {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : ise_per_rep) arr.push_back(num_array(row));
    j["ise_per_rep"] = arr;
  }
  return j.dump();
}

McReport McReport::from_json_string(const std::string& json) {
  const auto j = nlohmann::json::parse(json, nullptr, true, true);
  McReport r;
  r.config.truth = truth_from_json(j.at("truth"));
  if (j.contains("censoring")) r.config.censoring = truth_from_json(j.at("censoring"));
  r.config.horizon = j.at("horizon").get<double>();
  r.config.n = j.at("n").get<int>();
  r.config.replications = j.at("replications").get<int>();
  r.config.seed = j.at("seed").get<std::uint64_t>();
  r.grid = j.at("grid").get<std::vector<double>>();
  r.config.grid = r.grid;
  r.config.weight = j.value("weight", "one");
  for (const auto& ej : j.at("estimators")) {
    r.config.estimators.push_back(estimator_from_json(ej));
    r.estimator_labels.push_back(r.config.estimators.back().label);
  }
  for (const auto& rowj : j.at("cells")) {
    std::vector<McCell> row;
    for (const auto& cjj : rowj) {
      McCell c;
      c.mean = num_from(cjj.at("mean"));
      c.bias = num_from(cjj.at("bias"));
      c.variance = num_from(cjj.at("variance"));
      c.mse = num_from(cjj.at("mse"));
      c.bias_theory = num_from(cjj.at("bias_theory"));
      c.var_theory = num_from(cjj.at("var_theory"));
      c.failures = cjj.at("failures").get<int>();
      row.push_back(c);
    }
    r.cells.push_back(std::move(row));
  }
  r.integrated_wmse = num_array_from(j.at("integrated_wmse"));
  r.integrated_se = num_array_from(j.at("integrated_se"));
  for (const auto& rowj : j.at("ise_per_rep"))
    r.ise_per_rep.push_back(num_array_from(rowj));
  return r;
}

std::string McReport::to_csv_long() const {
  std::string out = "estimator,s,metric,value\n";
  for (std::size_t e = 0; e < estimator_labels.size(); ++e) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const McCell& c = cells[e][j];
      const std::string head = estimator_labels[e] + "," + fmt(grid[j]) + ",";
      out += head + "mean," + fmt(c.mean) + "\n";
      out += head + "bias," + fmt(c.bias) + "\n";
      out += head + "variance," + fmt(c.variance) + "\n";
      out += head + "mse," + fmt(c.mse) + "\n";
      out += head + "bias_theory," + fmt(c.bias_theory) + "\n";
      out += head + "var_theory," + fmt(c.var_theory) + "\n";
      out += head + "failures," + std::to_string(c.failures) + "\n";
    }
    out += estimator_labels[e] + ",," + "integrated_wmse," +
           fmt(integrated_wmse[e]) + "\n";
    out += estimator_labels[e] + ",," + "integrated_se," + fmt(integrated_se[e]) +
           "\n";
  }
  return out;
}

}  // namespace dynhaz
