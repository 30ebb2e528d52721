#include "dynhaz/gof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "dynhaz/error.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

GofKind gof_kind_from_name(const std::string& name) {
  if (name == "ks_1p") return GofKind::ks_1p;
  if (name == "ks_const" || name == "ks") return GofKind::ks_const;
  if (name == "ks_multi") return GofKind::ks_multi;
  if (name == "cvm") return GofKind::cvm;
  if (name == "l1") return GofKind::l1;
  throw Error("unknown gof kind: " + name);
}

std::string to_string(GofKind kind) {
  switch (kind) {
    case GofKind::ks_1p: return "ks_1p";
    case GofKind::ks_const: return "ks_const";
    case GofKind::ks_multi: return "ks_multi";
    case GofKind::cvm: return "cvm";
    case GofKind::l1: return "l1";
  }
  return "?";
}

double gof_threshold(GofKind kind, double level) {
  const bool ten = std::abs(level - 0.10) < 1e-12;
  const bool five = std::abs(level - 0.05) < 1e-12;
  if (!ten && !five) throw Error("level must be 0.10 or 0.05");
  switch (kind) {
    case GofKind::ks_1p:
    case GofKind::ks_const:
    case GofKind::ks_multi:
      return ten ? 1.225 : 1.359;
    case GofKind::cvm:
      return ten ? 0.347 : 0.461;
    case GofKind::l1:
      return ten ? 0.499 : 0.582;
  }
  throw Error("unknown gof kind");
}

namespace {

// Compensator Lambda(t) = theta int_a^t Y(u) gamma(u, beta) du evaluated
// at many t via prefix sums of the shape antiderivative:
//   int_a^t Y gamma du = sum_{x_j > a} { G(min(x_j, t)) - G(a) }.
class CompensatorSums {
 public:
  CompensatorSums(const SurvivalSample& sample, const HazardFamily& fam, double a,
                  double beta)
      : fam_(fam), beta_(beta), g_a_(fam.gamma_antideriv(a, beta)) {
    const auto& times = sample.times();
    const auto first = std::upper_bound(times.begin(), times.end(), a);
    times_ = std::vector<double>(first, times.end());
    prefix_.reserve(times_.size() + 1);
    prefix_.push_back(0.0);
    for (double t : times_)
      prefix_.push_back(prefix_.back() + fam_.gamma_antideriv(t, beta_));
  }

  // int_a^t Y gamma du (t >= a)
  double operator()(double t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto k = static_cast<std::size_t>(it - times_.begin());
    const auto tail = static_cast<double>(times_.size() - k);
    return prefix_[k] + tail * fam_.gamma_antideriv(t, beta_) -
           static_cast<double>(times_.size()) * g_a_;
  }

 private:
  const HazardFamily& fam_;
  double beta_;
  double g_a_;
  std::vector<double> times_;   // observations beyond a
  std::vector<double> prefix_;  // cumulative G(x_j)
};

}  // namespace

DnPath dn_path(const SurvivalSample& sample, const HazardFamily& family, double a,
               double b, const FitResult* precomputed_fit) {
  if (!(b > a)) throw Error("no events: degenerate interval");
  DnPath path;
  path.a = a;
  path.b = b;
  path.n = sample.size();
  path.n_ab = sample.event_count(a, b);
  if (path.n_ab == 0) throw Error("no events in [a, b]");

  path.fit = precomputed_fit ? *precomputed_fit : fit_interval_mle(sample, family, a, b);
  if (!path.fit.converged)
    throw Error("gof fit did not converge on [" + std::to_string(a) + ", " +
                std::to_string(b) + "]");
  const std::vector<double>& th = path.fit.theta;
  const double theta = th[0];
  const double beta = family.dim() > 1 ? th[1] : 0.0;

  if (!family.is_product())
    throw Error("gof requires a product-form family");
  CompensatorSums comp(sample, family, a, beta);

  const auto& times = sample.times();
  const auto& status = sample.statuses();

  path.eval_points.push_back(a);
  path.values.push_back(0.0);

  auto it = std::upper_bound(times.begin(), times.end(), a);
  int events_so_far = 0;
  while (it != times.end() && *it <= b) {
    const double t = *it;
    int d_here = 0;
    while (it != times.end() && *it == t) {
      const auto i = static_cast<std::size_t>(it - times.begin());
      d_here += status[i];
      ++it;
    }
    if (d_here == 0) continue;
    const double lam = theta * comp(t);
    const double before = events_so_far - lam;
    events_so_far += d_here;
    const double after = events_so_far - lam;
    path.eval_points.push_back(t);  // left limit
    path.values.push_back(before);
    path.eval_points.push_back(t);
    path.values.push_back(after);
    for (int d = 0; d < d_here; ++d) path.event_values.push_back(after);
  }
  path.eval_points.push_back(b);
  path.values.push_back(events_so_far - theta * comp(b));

  if (family.dim() == 1) {
    // score-weighted path and its variance scale
    std::span<const double> ths(th);
    std::vector<double> psi(1);
    path.values_1p.reserve(path.values.size());
    family.score(0.5 * (a + b), ths, psi);
    // for the constant family psi = 1/theta does not depend on t and the
    // weighted path is a plain rescale; generic one-parameter families go
    // through quadrature
    const bool psi_constant = family.tag() == FamilyTag::constant;
    if (psi_constant) {
      for (double v : path.values) path.values_1p.push_back(psi[0] * v);
      path.tau2_raw = psi[0] * psi[0] * theta * comp(b);
    } else {
      double run = 0.0;
      double prev = a;
      auto drift = [&](double t0, double t1) {
        double v = 0.0;
        sample.for_each_risk_segment(t0, t1, [&](const SurvivalSample::RiskSegment& seg) {
          if (seg.y == 0) return;
          v += seg.y * adaptive_quad(
                           [&](double u) {
                             std::vector<double> ps(1);
                             family.score(u, ths, ps);
                             return ps[0] * family.hazard(u, ths);
                           },
                           seg.lo, seg.hi, 1e-12);
        });
        return v;
      };
      path.values_1p.assign(path.values.size(), 0.0);
      for (std::size_t j = 1; j < path.eval_points.size(); ++j) {
        const double t = path.eval_points[j];
        run -= drift(prev, t);
        prev = t;
        if (j + 1 < path.eval_points.size() && path.eval_points[j + 1] == t) {
          path.values_1p[j] = run;  // left limit
          const double jump = path.values[j + 1] - path.values[j];
          std::vector<double> ps(1);
          family.score(t, ths, ps);
          run += ps[0] * jump;
          path.values_1p[j + 1] = run;
          ++j;
        } else {
          path.values_1p[j] = run;
        }
      }
      double tau = 0.0;
      sample.for_each_risk_segment(a, b, [&](const SurvivalSample::RiskSegment& seg) {
        if (seg.y == 0) return;
        tau += seg.y * adaptive_quad(
                           [&](double u) {
                             std::vector<double> ps(1);
                             family.score(u, ths, ps);
                             return ps[0] * ps[0] * family.hazard(u, ths);
                           },
                           seg.lo, seg.hi, 1e-12);
      });
      path.tau2_raw = tau;
    }
  }
  return path;
}

GofDecision gof_statistic(const DnPath& path, GofKind kind, double level,
                          std::optional<double> threshold_override) {
  GofDecision dec;
  dec.kind = kind;
  dec.level = level;
  dec.threshold = threshold_override ? *threshold_override : gof_threshold(kind, level);
  if (path.n_ab == 0) throw Error("no events in [a, b]");
  const double n_ab = path.n_ab;
  switch (kind) {
    case GofKind::ks_1p: {
      if (path.values_1p.empty())
        throw Error("ks_1p needs a one-parameter family");
      double m = 0;
      for (double v : path.values_1p) m = std::max(m, std::abs(v));
      dec.statistic = m / std::sqrt(path.tau2_raw);
      break;
    }
    case GofKind::ks_const:
    case GofKind::ks_multi: {
      double m = 0;
      for (double v : path.values) m = std::max(m, std::abs(v));
      dec.statistic = m / std::sqrt(n_ab);
      break;
    }
    case GofKind::cvm: {
      double s = 0;
      for (double v : path.event_values) s += v * v;
      dec.statistic = s / (n_ab * n_ab);
      break;
    }
    case GofKind::l1: {
      double s = 0;
      for (double v : path.event_values) s += std::abs(v);
      dec.statistic = s / (n_ab * std::sqrt(n_ab));
      break;
    }
  }
  dec.reject = dec.statistic >= dec.threshold;
  return dec;
}

std::vector<double> default_h_grid(const SurvivalSample& sample, double s,
                                   int min_events, double ratio) {
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  std::vector<double> need;
  need.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!status[i]) continue;
    if (times[i] >= s)
      need.push_back(2.0 * (times[i] - s));
    else  // left points enter the half-open window strictly
      need.push_back(std::nextafter(2.0 * (s - times[i]),
                                    std::numeric_limits<double>::infinity()));
  }
  if (static_cast<int>(need.size()) < min_events)
    throw Error("min_events unreachable: only " + std::to_string(need.size()) +
                " failures");
  std::nth_element(need.begin(), need.begin() + (min_events - 1), need.end());
  double h_min = std::max(need[static_cast<std::size_t>(min_events - 1)],
                          1e-9 * sample.horizon());
  const double h_full = 2.0 * std::max(s, sample.horizon() - s);
  std::vector<double> grid;
  for (double h = h_min; h < h_full; h *= ratio) grid.push_back(h);
  grid.push_back(h_full);
  return grid;
}

WindowChoice expand_window(const SurvivalSample& sample, const std::string& family,
                           double s, GofKind kind, double level, int min_events,
                           const std::vector<double>& h_grid) {
  if (h_grid.empty()) throw Error("empty window grid");
  const auto fam = make_local_family(family, s);
  WindowChoice choice;
  bool have_accept = false;
  for (double h : h_grid) {
    const double a = std::max(0.0, s - 0.5 * h);
    const double b = std::min(sample.horizon(), s + 0.5 * h);
    if (sample.event_count(a, b) < min_events) continue;
    DnPath path;
    try {
      path = dn_path(sample, *fam, a, b);
    } catch (const Error&) {
      continue;  // unusable window (no events / fit failure), keep stretching
    }
    const GofDecision dec = gof_statistic(path, kind, level);
    ++choice.windows_tested;
    if (dec.reject) {
      if (!have_accept) {
        // the very first feasible window already rejects: the min_events
        // floor wins, return it
        choice.h = h;
        choice.at_stop = dec;
      } else {
        choice.at_stop = dec;
      }
      return choice;
    }
    choice.h = h;
    choice.at_stop = dec;
    have_accept = true;
  }
  if (!have_accept) throw Error("min_events unreachable on the window grid");
  choice.full_range = true;
  return choice;
}

namespace {

StartupResult startup_scan(const SurvivalSample& sample, const std::string& family,
                           GofKind kind, double level, int min_events, double shrink,
                           bool mirrored) {
  const double horizon = sample.horizon();
  // work on the interval [0, b] (or [T - b, T] mirrored)
  auto interval = [&](double b) {
    return mirrored ? std::pair<double, double>(horizon - b, horizon)
                    : std::pair<double, double>(0.0, b);
  };
  // smallest b holding min_events failures
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  std::vector<double> fails;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (status[i]) fails.push_back(mirrored ? horizon - times[i] : times[i]);
  if (static_cast<int>(fails.size()) < min_events)
    throw Error("min_events unreachable: only " + std::to_string(fails.size()) +
                " failures");
  std::sort(fails.begin(), fails.end());
  double b_min = std::max(fails[static_cast<std::size_t>(min_events - 1)],
                          1e-9 * horizon);
  if (mirrored)  // left limits enter strictly
    b_min = std::nextafter(b_min, std::numeric_limits<double>::infinity());

  StartupResult res;
  double b_reject = -1;
  for (double b = b_min; b < horizon; b *= 1.15) {
    const auto [lo, hi] = interval(b);
    if (sample.event_count(lo, hi) < min_events) continue;
    const double anchor = 0.5 * (lo + hi);
    const auto fam = make_local_family(family, anchor);
    DnPath path;
    try {
      path = dn_path(sample, *fam, lo, hi);
    } catch (const Error&) {
      continue;
    }
    if (gof_statistic(path, kind, level).reject) {
      b_reject = b;
      break;
    }
  }

  double b0 = horizon;
  bool full = true;
  if (b_reject > 0) {
    b0 = std::max(shrink * b_reject, b_min);
    full = false;
  }
  const auto [lo, hi] = interval(b0);
  const double anchor = 0.5 * (lo + hi);
  const auto fam = make_local_family(family, anchor);
  res.b0 = b0;
  res.full_range = full;
  res.anchor = anchor;
  res.fit = fit_interval_mle(sample, *fam, lo, hi);
  return res;
}

}  // namespace

StartupResult startup_interval(const SurvivalSample& sample, const std::string& family,
                               GofKind kind, double level, int min_events,
                               double shrink) {
  return startup_scan(sample, family, kind, level, min_events, shrink, false);
}

StartupResult startup_interval_mirrored(const SurvivalSample& sample,
                                        const std::string& family, GofKind kind,
                                        double level, int min_events, double shrink) {
  return startup_scan(sample, family, kind, level, min_events, shrink, true);
}

}  // namespace dynhaz
