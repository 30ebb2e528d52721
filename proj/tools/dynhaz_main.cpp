// dynhaz: dynamic likelihood hazard rate estimation from censored data.
//
// Subcommands: estimate, gof-scan, simulate, compare, bandwidth. Every
// output file embeds the resolved configuration, tool version and seed, so
// a run can be reproduced from any one of its outputs. Runs are
// deterministic: identical configuration gives byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynhaz/error.hpp"
#include "dynhaz/experiment.hpp"
#include "dynhaz/gof.hpp"
#include "dynhaz/local_fit.hpp"
#include "dynhaz/nelson_aalen.hpp"
#include "dynhaz/version.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw dynhaz::Error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

// named kernel or "poly:c0,c1,..." coefficient list
dynhaz::Kernel kernel_from_spec(const std::string& spec) {
  if (spec.rfind("poly:", 0) == 0) {
    std::vector<double> coeffs;
    std::stringstream ss(spec.substr(5));
    std::string tok;
    while (std::getline(ss, tok, ',')) coeffs.push_back(std::stod(tok));
    return dynhaz::Kernel::custom(std::move(coeffs));
  }
  return dynhaz::Kernel::from_name(spec);
}

std::string provenance_comment(const json& config) {
  std::string out;
  out += "# dynhaz " + std::string(dynhaz::version_string) + "\n";
  out += "# config " + config.dump() + "\n";
  return out;
}

json provenance_json(const json& config) {
  return {{"tool", "dynhaz"}, {"version", dynhaz::version_string}, {"config", config}};
}

struct RunConfig {
  std::string command;
  std::string input;        // csv path
  std::string config_path;  // json config file
  std::string law;          // inline simulation law (json)
  int n = 0;
  std::string family = "constant";
  std::string kernel = "epanechnikov";
  std::string bandwidth = "fixed:1";
  std::string estimator = "dynamic";  // dynamic | nelson-aalen
  std::string grid;                   // comma separated points
  int grid_count = 0;
  std::string kind = "ks";
  double level = 0.10;
  double band_level = 0.95;
  bool band_correction = false;
  bool post_smooth_shape = false;
  int min_events = 10;
  double horizon = 0;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string time_col = "time";
  std::string status_col = "status";
  std::string weight = "y45";
  double pilot_h2 = 0;
  std::string output;
};

json config_echo(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (!c.input.empty()) j["input"] = c.input;
  if (!c.law.empty()) j["law"] = json::parse(c.law);
  if (c.n > 0) j["n"] = c.n;
  j["family"] = c.family;
  j["kernel"] = c.kernel;
  j["bandwidth"] = c.bandwidth;
  j["estimator"] = c.estimator;
  if (!c.grid.empty()) j["grid"] = c.grid;
  if (c.grid_count > 0) j["grid_count"] = c.grid_count;
  j["kind"] = c.kind;
  j["level"] = c.level;
  j["band_level"] = c.band_level;
  j["band_correction"] = c.band_correction;
  j["post_smooth_shape"] = c.post_smooth_shape;
  j["min_events"] = c.min_events;
  if (c.horizon > 0) j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["time_col"] = c.time_col;
  j["status_col"] = c.status_col;
  j["weight"] = c.weight;
  if (c.pilot_h2 > 0) j["pilot_h2"] = c.pilot_h2;
  j["output"] = c.output;
  return j;
}

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> violations;
  if (c.command == "estimate" || c.command == "gof-scan" || c.command == "bandwidth") {
    if (c.input.empty() && c.law.empty())
      violations.push_back("either --input or --law is required");
    if (!c.law.empty() && c.n <= 0)
      violations.push_back("--law needs a positive --n");
    if (!dynhaz::family_known(c.family))
      violations.push_back("unknown family: " + c.family);
    if (c.kernel.rfind("poly:", 0) != 0 && c.kernel != "uniform" &&
        c.kernel != "epanechnikov" && c.kernel != "biweight")
      violations.push_back("unknown kernel: " + c.kernel);
    try {
      dynhaz::BandwidthPlan::parse(c.bandwidth);
    } catch (const dynhaz::Error& e) {
      if (c.command == "estimate")
        violations.push_back(std::string("bandwidth must be positive: ") + e.what());
    }
    if (c.min_events < 1) violations.push_back("min_events must be >= 1");
    if (c.estimator != "dynamic" && c.estimator != "nelson-aalen")
      violations.push_back("unknown estimator: " + c.estimator);
  }
  if (c.command == "estimate" || c.command == "gof-scan") {
    if (std::abs(c.level - 0.10) > 1e-12 && std::abs(c.level - 0.05) > 1e-12)
      violations.push_back("level must be 0.10 or 0.05");
  }
  if (c.command == "estimate") {
    if (!(c.band_level > 0) || !(c.band_level < 1))
      violations.push_back("band_level must be in (0, 1)");
  }
  if (c.command == "gof-scan" || c.command == "bandwidth") {
    try {
      dynhaz::gof_kind_from_name(c.kind);
    } catch (const dynhaz::Error&) {
      if (c.command == "gof-scan") violations.push_back("unknown gof kind: " + c.kind);
    }
  }
  if (c.command == "simulate" || c.command == "compare") {
    if (c.command == "simulate" && c.config_path.empty())
      violations.push_back("simulate needs --config <experiment.json>");
    if (c.command == "compare" && c.input.empty())
      violations.push_back("compare needs --input <report.json>");
  }
  if (c.command == "bandwidth" && c.weight != "y45" && c.weight != "one")
    violations.push_back("weight must be y45 or one");
  if (c.output.empty()) violations.push_back("output stem must not be empty");
  return violations;
}

dynhaz::SurvivalSample load_sample(const RunConfig& c) {
  if (!c.input.empty())
    return dynhaz::SurvivalSample::ingest_csv(c.input, {c.time_col, c.status_col},
                                              c.horizon);
  const json lj = json::parse(c.law);
  const auto truth = dynhaz::make_truth(lj.at("truth").at("name").get<std::string>(),
                                        lj.at("truth").at("params").get<std::vector<double>>());
  std::optional<dynhaz::Truth> censoring;
  if (lj.contains("censoring"))
    censoring = dynhaz::make_truth(lj.at("censoring").at("name").get<std::string>(),
                                   lj.at("censoring").at("params").get<std::vector<double>>());
  const double horizon = c.horizon > 0 ? c.horizon : lj.at("horizon").get<double>();
  return dynhaz::simulate(dynhaz::make_law(truth, censoring, horizon, c.seed), c.n);
}

std::vector<double> resolve_grid(const RunConfig& c, double horizon) {
  std::vector<double> grid;
  if (!c.grid.empty()) {
    std::stringstream ss(c.grid);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  } else {
    const int count = c.grid_count > 0 ? c.grid_count : 41;
    for (int i = 0; i < count; ++i)
      grid.push_back(horizon * i / std::max(count - 1, 1));
  }
  return grid;
}

int cmd_estimate(const RunConfig& c) {
  const auto sample = load_sample(c);
  const auto grid = resolve_grid(c, sample.horizon());
  const json echo = config_echo(c);

  std::string csv = provenance_comment(echo);
  if (c.estimator == "nelson-aalen") {
    const auto kernel = kernel_from_spec(c.kernel);
    auto plan = dynhaz::BandwidthPlan::parse(c.bandwidth);
    if (plan.kind == dynhaz::BandwidthPlan::Kind::plugin && !plan.resolved)
      plan = dynhaz::plugin_global_c(sample, kernel, dynhaz::FamilyTag::generic,
                                     dynhaz::PilotConfig{c.pilot_h2});
    csv += "s,alpha_tilde,h\n";
    for (double s : grid) {
      const double h = plan.h_at(sample, s);
      csv += fmt(s) + "," + fmt(dynhaz::smoothed_hazard(sample, kernel, h, s)) + "," +
             fmt(h) + "\n";
    }
  } else {
    dynhaz::LocalFitSpec spec;
    spec.family = c.family;
    spec.kernel = kernel_from_spec(c.kernel);
    spec.bandwidth = dynhaz::BandwidthPlan::parse(c.bandwidth);
    if (spec.bandwidth.kind == dynhaz::BandwidthPlan::Kind::plugin &&
        !spec.bandwidth.resolved)
      spec.bandwidth = dynhaz::plugin_global_c(sample, spec.kernel,
                                               dynhaz::family_tag_from_name(c.family),
                                               dynhaz::PilotConfig{c.pilot_h2});
    spec.grid = grid;
    spec.min_events = c.min_events;
    spec.gof_level = c.level;
    spec.gof_kind = dynhaz::family_dim(c.family) == 1 ? dynhaz::GofKind::ks_const
                                                      : dynhaz::GofKind::ks_multi;
    spec.band_level = c.band_level;
    spec.band_bias_correction = c.band_correction;
    spec.post_smooth_shape = c.post_smooth_shape;
    spec.threads = c.threads;
    const auto curve = dynhaz::estimate_curve(sample, spec);

    const int p = dynhaz::family_dim(c.family);
    csv += "s,alpha_hat,h_used,se,band_lo,band_hi";
    for (int j = 1; j <= p; ++j) csv += ",theta_" + std::to_string(j);
    csv += ",flag\n";
    for (const auto& pt : curve.points) {
      csv += fmt(pt.s) + "," + fmt(pt.alpha_hat) + "," + fmt(pt.h_used) + "," +
             fmt(pt.se) + "," + fmt(pt.band_lo) + "," + fmt(pt.band_hi);
      for (int j = 0; j < p; ++j)
        csv += "," + (j < static_cast<int>(pt.theta_local.size())
                          ? fmt(pt.theta_local[static_cast<std::size_t>(j)])
                          : std::string("nan"));
      csv += "," + dynhaz::to_string(pt.flag) + "\n";
    }
  }
  atomic_write(c.output + ".csv", csv);
  atomic_write(c.output + ".json", provenance_json(echo).dump(2) + "\n");
  return 0;
}

int cmd_gof_scan(const RunConfig& c) {
  const auto sample = load_sample(c);
  const auto grid = resolve_grid(c, sample.horizon());
  const json echo = config_echo(c);
  const auto kind = dynhaz::gof_kind_from_name(c.kind);

  std::string csv = provenance_comment(echo);
  csv += "s,h_hat,statistic_at_stop,kind,level,sentinel_flag\n";
  for (double s : grid) {
    std::string row = fmt(s);
    try {
      const auto hgrid = dynhaz::default_h_grid(sample, s, c.min_events);
      const auto choice =
          dynhaz::expand_window(sample, c.family, s, kind, c.level, c.min_events, hgrid);
      row += "," + fmt(choice.h) + "," + fmt(choice.at_stop.statistic) + "," +
             dynhaz::to_string(kind) + "," + fmt(c.level) + "," +
             (choice.full_range ? "1" : "0");
    } catch (const dynhaz::Error&) {
      row += ",nan,nan," + dynhaz::to_string(kind) + "," + fmt(c.level) + ",0";
    }
    csv += row + "\n";
  }
  atomic_write(c.output + ".csv", csv);
  atomic_write(c.output + ".json", provenance_json(echo).dump(2) + "\n");
  return 0;
}

dynhaz::Experiment experiment_from_json(const json& j) {
  dynhaz::Experiment exp;
  exp.truth = dynhaz::make_truth(j.at("truth").at("name").get<std::string>(),
                                 j.at("truth").at("params").get<std::vector<double>>());
  if (j.contains("censoring"))
    exp.censoring =
        dynhaz::make_truth(j.at("censoring").at("name").get<std::string>(),
                           j.at("censoring").at("params").get<std::vector<double>>());
  exp.horizon = j.at("horizon").get<double>();
  exp.n = j.at("n").get<int>();
  exp.replications = j.at("replications").get<int>();
  exp.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("grid").is_array()) {
    exp.grid = j.at("grid").get<std::vector<double>>();
  } else {
    const int count = j.at("grid").at("count").get<int>();
    for (int i = 0; i < count; ++i)
      exp.grid.push_back(exp.horizon * i / std::max(count - 1, 1));
  }
  exp.weight = j.value("weight", "one");
  for (const auto& ej : j.at("estimators")) {
    dynhaz::EstimatorConfig e;
    e.label = ej.at("label").get<std::string>();
    e.type = ej.value("type", "dynamic") == "smoothed_na"
                 ? dynhaz::EstimatorConfig::Type::smoothed_na
                 : dynhaz::EstimatorConfig::Type::dynamic;
    e.family = ej.value("family", "constant");
    e.kernel = ej.value("kernel", "uniform");
    e.bandwidth = dynhaz::BandwidthPlan::parse(ej.at("bandwidth").get<std::string>());
    e.min_events = ej.value("min_events", 10);
    exp.estimators.push_back(e);
  }
  exp.threads = j.value("threads", 0);
  return exp;
}

int cmd_simulate(const RunConfig& c) {
  std::ifstream in(c.config_path);
  if (!in) throw dynhaz::Error("cannot open config: " + c.config_path);
  json j;
  in >> j;
  dynhaz::Experiment exp = experiment_from_json(j);
  if (c.threads > 0) exp.threads = c.threads;
  const auto report = dynhaz::run_experiment(exp);

  json echo = config_echo(c);
  echo["experiment"] = j;
  atomic_write(c.output + ".csv", provenance_comment(echo) + report.to_csv_long());
  json out = provenance_json(echo);
  out["report"] = json::parse(report.to_json_string());
  atomic_write(c.output + ".json", out.dump(2) + "\n");
  return 0;
}

int cmd_compare(const RunConfig& c) {
  std::ifstream in(c.input);
  if (!in) throw dynhaz::Error("cannot open report: " + c.input);
  json j;
  in >> j;
  const json rj = j.contains("report") ? j.at("report") : j;
  const auto report = dynhaz::McReport::from_json_string(rj.dump());
  const auto ranking = dynhaz::compare_estimators(report);
  const json echo = config_echo(c);
  atomic_write(c.output + ".csv", provenance_comment(echo) + ranking.to_csv());
  atomic_write(c.output + ".json", provenance_json(echo).dump(2) + "\n");
  return 0;
}

int cmd_bandwidth(const RunConfig& c) {
  const auto sample = load_sample(c);
  const auto grid = resolve_grid(c, sample.horizon());
  const json echo = config_echo(c);
  const auto kernel = kernel_from_spec(c.kernel);
  const auto plan = dynhaz::plugin_global_c(
      sample, kernel, dynhaz::family_tag_from_name(c.family),
      dynhaz::PilotConfig{c.pilot_h2},
      c.weight == "one" ? dynhaz::PluginWeight::one : dynhaz::PluginWeight::y_to_4_5);

  std::string csv = provenance_comment(echo);
  csv += "s,h\n";
  for (double s : grid) csv += fmt(s) + "," + fmt(plan.h_at(sample, s)) + "\n";
  atomic_write(c.output + ".csv", csv);

  json out = provenance_json(echo);
  out["plan"] = {{"kind", "plugin"},
                 {"c", plan.c},
                 {"meta", plan.meta},
                 {"bandwidth", plan.to_string()}};
  atomic_write(c.output + ".json", out.dump(2) + "\n");
  return 0;
}

// config-file values fill in every option the command line left untouched
void merge_config_file(CLI::App& app, RunConfig& c) {
  if (c.config_path.empty()) return;
  std::ifstream in(c.config_path);
  if (!in) throw dynhaz::Error("cannot open config: " + c.config_path);
  json j;
  in >> j;
  auto take = [&](const char* flag, auto& field) {
    using T = std::decay_t<decltype(field)>;
    const auto* opt = app.get_option_no_throw(flag);
    if (!j.contains(&flag[2])) return;
    if (opt && opt->count() > 0) return;  // flags override the file
    field = j.at(&flag[2]).get<T>();
  };
  take("--input", c.input);
  take("--family", c.family);
  take("--kernel", c.kernel);
  take("--bandwidth", c.bandwidth);
  take("--estimator", c.estimator);
  take("--grid", c.grid);
  take("--kind", c.kind);
  take("--level", c.level);
  take("--min-events", c.min_events);
  take("--seed", c.seed);
  take("--threads", c.threads);
  take("--weight", c.weight);
  take("--output", c.output);
  take("--n", c.n);
  take("--horizon", c.horizon);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic likelihood hazard rate estimation"};
  app.require_subcommand(1);

  RunConfig c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", c.input, "input CSV (header row)");
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--law", c.law, "inline simulation law (JSON)");
    sub->add_option("--n", c.n, "sample size for --law");
    sub->add_option("--family", c.family, "constant|gompertz|weibull|frailty");
    sub->add_option("--kernel", c.kernel, "uniform|epanechnikov|biweight");
    sub->add_option("--bandwidth", c.bandwidth, "fixed:<h>|adaptive:<c>|plugin|gof");
    sub->add_option("--grid", c.grid, "comma-separated evaluation points");
    sub->add_option("--grid-count", c.grid_count, "evenly spaced grid size");
    sub->add_option("--level", c.level, "gof significance level (0.10 or 0.05)");
    sub->add_option("--min-events", c.min_events, "window event floor");
    sub->add_option("--horizon", c.horizon, "override observation horizon");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "parallelism cap (0 = auto)");
    sub->add_option("--time-col", c.time_col, "time column name");
    sub->add_option("--status-col", c.status_col, "status column name");
    sub->add_option("--output", c.output, "output stem (writes .csv and .json)");
  };

  auto* estimate = app.add_subcommand("estimate", "fit a hazard curve");
  add_common(estimate);
  estimate->add_option("--estimator", c.estimator, "dynamic|nelson-aalen");
  estimate->add_option("--band-level", c.band_level, "pointwise band level");
  estimate->add_flag("--band-correction", c.band_correction,
                     "subtract the pilot bias estimate from the band center");
  estimate->add_flag("--post-smooth-shape", c.post_smooth_shape,
                     "smooth the local shape estimates before the final level step");
  estimate->add_option("--pilot-h2", c.pilot_h2, "pilot bandwidth override");

  auto* gof = app.add_subcommand("gof-scan", "window expansion scan");
  add_common(gof);
  gof->add_option("--kind", c.kind, "ks|ks_1p|ks_const|ks_multi|cvm|l1");

  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  add_common(simulate);

  auto* compare = app.add_subcommand("compare", "rank estimators from a report");
  add_common(compare);

  auto* bandwidth = app.add_subcommand("bandwidth", "plug-in bandwidth selection");
  add_common(bandwidth);
  bandwidth->add_option("--weight", c.weight, "integrated-error weight: y45|one");
  bandwidth->add_option("--pilot-h2", c.pilot_h2, "pilot bandwidth override");

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  c.command = sub->get_name();
  if (c.output.empty()) {
    if (c.command == "estimate") c.output = "curve";
    else if (c.command == "gof-scan") c.output = "gofscan";
    else if (c.command == "simulate") c.output = "report";
    else if (c.command == "compare") c.output = "ranking";
    else c.output = "bandwidth";
  }

  try {
    if (c.command != "simulate") merge_config_file(*sub, c);
    const auto violations = validate(c);
    if (!violations.empty()) {
      json err;
      err["error"] = "validation failed";
      err["violations"] = violations;
      std::fprintf(stderr, "%s\n", err.dump().c_str());
      return 2;
    }
    if (c.command == "estimate") return cmd_estimate(c);
    if (c.command == "gof-scan") return cmd_gof_scan(c);
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "compare") return cmd_compare(c);
    if (c.command == "bandwidth") return cmd_bandwidth(c);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 2;
}
