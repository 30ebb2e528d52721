#include "dynhaz/fit.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>

#include <json.hpp>

#include "dynhaz/error.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

namespace {

constexpr double kInnerTol = 1e-12;

struct WindowData {
  double a, b;                      // integration interval (clipped)
  double lo;                        // event membership is (lo, b]
  std::function<double(double)> weight;
  std::vector<std::size_t> events;  // indices of failures in (lo, b]
  std::vector<double> wt;           // weight at each event
  double nw = 0;                    // sum of event weights
};

WindowData collect_window(const SurvivalSample& sample,
                          const std::function<double(double)>& weight, double lo,
                          double a, double b) {
  WindowData wd;
  wd.a = a;
  wd.b = b;
  wd.lo = lo;
  wd.weight = weight;
  const auto& times = sample.times();
  const auto& status = sample.statuses();
  auto it = std::upper_bound(times.begin(), times.end(), lo);
  for (; it != times.end() && *it <= b; ++it) {
    const auto i = static_cast<std::size_t>(it - times.begin());
    if (!status[i]) continue;
    const double w = weight(times[i]);
    if (w == 0.0) continue;
    wd.events.push_back(i);
    wd.wt.push_back(w);
    wd.nw += w;
  }
  return wd;
}

// int_a^b w Y f dt, adaptive between order statistics
double risk_integral(const SurvivalSample& sample, const WindowData& wd,
                     const std::function<double(double)>& f) {
  double total = 0.0;
  sample.for_each_risk_segment(wd.a, wd.b, [&](const SurvivalSample::RiskSegment& seg) {
    if (seg.y == 0) return;
    total += seg.y * adaptive_quad([&](double t) { return wd.weight(t) * f(t); },
                                   seg.lo, seg.hi, kInnerTol);
  });
  return total;
}

// Profile pieces for product families: D = int w Y gamma dt and
// E = int w Y phi gamma dt = dD/dbeta.
struct ProfileIntegrals {
  double d = 0, e = 0;
};

ProfileIntegrals profile_integrals(const SurvivalSample& sample, const WindowData& wd,
                                   const HazardFamily& fam, double beta) {
  ProfileIntegrals out;
  out.d = risk_integral(sample, wd, [&](double t) { return fam.gamma(t, beta); });
  out.e = risk_integral(sample, wd,
                        [&](double t) { return fam.phi(t, beta) * fam.gamma(t, beta); });
  return out;
}

// Same pieces via the closed-form antiderivative when the weight is the
// [a, b] indicator.
ProfileIntegrals profile_integrals_exact(const SurvivalSample& sample, double a,
                                         double b, const HazardFamily& fam,
                                         double beta) {
  const auto& times = sample.times();
  auto first = std::upper_bound(times.begin(), times.end(), a);
  ProfileIntegrals out;
  const double ga = fam.gamma_antideriv(a, beta);
  const double dga = fam.gamma_antideriv_dbeta(a, beta);
  const double gb = fam.gamma_antideriv(b, beta);
  const double dgb = fam.gamma_antideriv_dbeta(b, beta);
  for (auto it = first; it != times.end(); ++it) {
    if (*it >= b) {
      const auto tail = static_cast<double>(times.end() - it);
      out.d += tail * (gb - ga);
      out.e += tail * (dgb - dga);
      break;
    }
    out.d += fam.gamma_antideriv(*it, beta) - ga;
    out.e += fam.gamma_antideriv_dbeta(*it, beta) - dga;
  }
  return out;
}

struct ProfileEval {
  double u;      // shape score  sum w phi dN - theta(beta) int w Y phi gamma
  double theta;  // level given beta
};

// Safeguarded root search for the profile shape score. The profile
// log-likelihood is concave for the running exponential-slope family and
// near-concave for the others, so U is decreasing; the search still
// protects itself with a bracket and bisection fallback.
FitResult solve_profile(const HazardFamily& fam, double beta_init, double beta_scale,
                        const std::function<ProfileEval(double)>& eval, double nw,
                        const FitOptions& opts) {
  FitResult res;
  const double tol = kInnerTol * (1.0 + nw);
  const double bmin = fam.beta_min();
  const double bmax = std::min(fam.beta_max(), 400.0 * beta_scale);
  double beta = std::clamp(beta_init, bmin, bmax);
  ProfileEval cur = eval(beta);
  int iters = 1;

  auto finish = [&](double b_hat, const ProfileEval& ev, const std::string& warn) {
    res.theta = {ev.theta, b_hat};
    res.iterations = iters;
    res.score_residual = std::abs(ev.u) / (1.0 + nw);
    res.converged = res.score_residual <= opts.tol;
    res.warning = warn;
    return res;
  };

  if (std::abs(cur.u) <= tol) return finish(beta, cur, "");

  // walk a bracket; U decreasing means the root lies on the side where U
  // changes sign
  double lo = beta, hi = beta;
  double ulo = cur.u, uhi = cur.u;
  double step = 0.25 * beta_scale;
  const int dir = cur.u > 0 ? +1 : -1;
  for (int k = 0; k < 80 && iters < opts.max_iter; ++k) {
    double cand = beta + dir * step;
    if (cand < bmin) cand = bmin;
    if (cand > bmax) cand = bmax;
    const ProfileEval ev = eval(cand);
    ++iters;
    if ((cur.u > 0) != (ev.u > 0) || ev.u == 0.0) {
      if (dir > 0) {
        lo = beta; ulo = cur.u; hi = cand; uhi = ev.u;
      } else {
        lo = cand; ulo = ev.u; hi = beta; uhi = cur.u;
      }
      break;
    }
    beta = cand;
    cur = ev;
    if (cand == bmin || cand == bmax) {
      // no sign change inside the domain: boundary (KKT) or failure
      if ((cand == bmin && cur.u < 0) || (cand == bmax && cur.u > 0))
        return finish(cand, cur,
                      std::string("shape fixed at domain boundary (") +
                          (cand == bmin ? "min" : "max") + ")");
      return finish(cand, cur, "profile search exhausted the domain");
    }
    step *= 1.8;
  }
  if (!((ulo > 0) != (uhi > 0)) && ulo != 0.0 && uhi != 0.0)
    return finish(beta, cur, "no profile bracket found");

  // secant within the bracket, bisection as guard
  double x0 = lo, u0 = ulo, x1 = hi, u1 = uhi;
  while (iters < opts.max_iter) {
    double cand = (u1 != u0) ? x1 - u1 * (x1 - x0) / (u1 - u0) : 0.5 * (lo + hi);
    if (!(cand > lo) || !(cand < hi)) cand = 0.5 * (lo + hi);
    const ProfileEval ev = eval(cand);
    ++iters;
    if (std::abs(ev.u) <= tol || (hi - lo) <= 1e-14 * (1.0 + std::abs(cand)))
      return finish(cand, ev, "");
    if ((ev.u > 0) == (ulo > 0)) {
      lo = cand; ulo = ev.u;
    } else {
      hi = cand; uhi = ev.u;
    }
    x0 = x1; u0 = u1; x1 = cand; u1 = ev.u;
  }
  const ProfileEval ev = eval(0.5 * (lo + hi));
  return finish(0.5 * (lo + hi), ev, "profile iteration limit reached");
}

std::vector<double> score_at(const SurvivalSample& sample, const WindowData& wd,
                             const HazardFamily& fam, std::span<const double> th) {
  const int p = fam.dim();
  std::vector<double> s(static_cast<std::size_t>(p), 0.0);
  std::vector<double> psi(static_cast<std::size_t>(p));
  const auto& times = sample.times();
  for (std::size_t k = 0; k < wd.events.size(); ++k) {
    fam.score(times[wd.events[k]], th, psi);
    for (int j = 0; j < p; ++j) s[static_cast<std::size_t>(j)] += wd.wt[k] * psi[static_cast<std::size_t>(j)];
  }
  for (int j = 0; j < p; ++j) {
    s[static_cast<std::size_t>(j)] -= risk_integral(sample, wd, [&](double t) {
      std::vector<double> ps(static_cast<std::size_t>(p));
      fam.score(t, th, ps);
      return ps[static_cast<std::size_t>(j)] * fam.hazard(t, th);
    });
  }
  return s;
}

Matrix score_jacobian(const SurvivalSample& sample, const WindowData& wd,
                      const HazardFamily& fam, std::span<const double> th) {
  const int p = fam.dim();
  Matrix jac(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  Matrix hess;
  const auto& times = sample.times();
  for (std::size_t k = 0; k < wd.events.size(); ++k) {
    fam.log_hessian(times[wd.events[k]], th, hess);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        jac(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +=
            wd.wt[k] * hess(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      const double v = risk_integral(sample, wd, [&](double t) {
        std::vector<double> ps(static_cast<std::size_t>(p));
        fam.score(t, th, ps);
        Matrix hs;
        fam.log_hessian(t, th, hs);
        const double al = fam.hazard(t, th);
        return al * (hs(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
                     ps[static_cast<std::size_t>(i)] * ps[static_cast<std::size_t>(j)]);
      });
      jac(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) -= v;
      if (i != j)
        jac(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) =
            jac(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  return jac;
}

FitResult fit_newton(const SurvivalSample& sample, const WindowData& wd,
                     const HazardFamily& fam, std::vector<double> th,
                     const FitOptions& opts) {
  FitResult res;
  const int p = fam.dim();
  std::string warning;
  if (fam.clamp_to_domain(th)) warning = "initial point clamped to domain";
  auto norm = [&](const std::vector<double>& s) {
    double m = 0;
    for (double v : s) m = std::max(m, std::abs(v));
    return m / (1.0 + wd.nw);
  };
  std::vector<double> s = score_at(sample, wd, fam, th);
  int iters = 0;
  while (iters < opts.max_iter && norm(s) > kInnerTol) {
    ++iters;
    Matrix jac = score_jacobian(sample, wd, fam, th);
    std::vector<double> rhs(s);
    for (double& v : rhs) v = -v;
    std::vector<double> step;
    try {
      step = solve(jac, rhs);
    } catch (const Error&) {
      warning = "singular score jacobian";
      break;
    }
    double lambda = 1.0;
    const double base = norm(s);
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      std::vector<double> cand(th);
      for (int j = 0; j < p; ++j)
        cand[static_cast<std::size_t>(j)] += lambda * step[static_cast<std::size_t>(j)];
      if (fam.clamp_to_domain(cand) && warning.empty())
        warning = "step clamped to domain";
      std::vector<double> sc = score_at(sample, wd, fam, cand);
      if (norm(sc) < base || half == 29) {
        th = std::move(cand);
        s = std::move(sc);
        accepted = norm(s) < base;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
  }
  res.theta = th;
  res.iterations = iters;
  res.score_residual = norm(s);
  res.converged = res.score_residual <= opts.tol;
  res.warning = warning;
  return res;
}

FitResult fit_window(const SurvivalSample& sample, const WindowData& wd,
                     const HazardFamily& fam, const FitOptions& opts, bool exact_interval) {
  if (wd.events.empty()) throw Error("empty window: no weighted failures");
  const int p = fam.dim();

  if (fam.is_product() && p <= 2 &&
      (opts.method != FitOptions::Method::newton)) {
    const double beta0 = opts.init.size() >= 2 ? opts.init[1]
                         : (fam.name() == "weibull" && fam.anchor() == 0.0) ? 1.0
                                                                            : 0.0;
    if (p == 1) {
      const double d =
          exact_interval
              ? profile_integrals_exact(sample, wd.a, wd.b, fam, 0.0).d
              : risk_integral(sample, wd, [&](double t) { return fam.gamma(t, 0.0); });
      if (!(d > 0)) throw Error("empty window: zero exposure");
      FitResult res;
      res.theta = {wd.nw / d};
      res.converged = true;
      res.iterations = 1;
      res.score_residual = 0.0;
      return res;
    }
    const auto& times = sample.times();
    auto eval = [&](double beta) {
      const ProfileIntegrals pi =
          exact_interval ? profile_integrals_exact(sample, wd.a, wd.b, fam, beta)
                         : profile_integrals(sample, wd, fam, beta);
      if (!(pi.d > 0)) throw Error("empty window: zero exposure");
      ProfileEval ev;
      ev.theta = wd.nw / pi.d;
      double pw = 0;
      for (std::size_t k = 0; k < wd.events.size(); ++k)
        pw += wd.wt[k] * fam.phi(times[wd.events[k]], beta);
      ev.u = pw - ev.theta * pi.e;
      return ev;
    };
    const double beta_scale = 4.0 / std::max(wd.b - wd.a, 1e-12);
    FitResult res = solve_profile(fam, beta0, beta_scale, eval, wd.nw, opts);
    return res;
  }

  // generic path: damped Newton on the score
  std::vector<double> init = opts.init;
  if (init.empty()) {
    const double d = risk_integral(sample, wd, [](double) { return 1.0; });
    if (!(d > 0)) throw Error("empty window: zero exposure");
    init.assign(static_cast<std::size_t>(p), 0.0);
    init[0] = wd.nw / d;
    if (p > 1 && fam.name() == "weibull" && fam.anchor() == 0.0) init[1] = 1.0;
  }
  return fit_newton(sample, wd, fam, std::move(init), opts);
}

}  // namespace

FitResult fit_weighted_mle(const SurvivalSample& sample, const HazardFamily& family,
                           const std::function<double(double)>& weight, double a,
                           double b, const FitOptions& opts) {
  if (!(a <= b)) throw Error("fit: a > b");
  WindowData wd = collect_window(sample, weight, a, a, b);
  FitResult res = fit_window(sample, wd, family, opts, false);
  res.weight_descr = "custom weight on [" + std::to_string(a) + ", " + std::to_string(b) + "]";
  return res;
}

FitResult fit_interval_mle(const SurvivalSample& sample, const HazardFamily& family,
                           double a, double b, const FitOptions& opts) {
  if (!(a <= b)) throw Error("fit: a > b");
  WindowData wd = collect_window(sample, [](double) { return 1.0; }, a, a, b);
  FitResult res = fit_window(sample, wd, family, opts, true);
  res.weight_descr = "indicator of [" + std::to_string(a) + ", " + std::to_string(b) + "]";
  return res;
}

FitResult fit_kernel_window(const SurvivalSample& sample, const HazardFamily& family,
                            const Kernel& kernel, double s, double h,
                            const FitOptions& opts) {
  if (!(h > 0)) throw Error("bandwidth must be positive");
  const double lo = s - 0.5 * h, hi = s + 0.5 * h;
  const double a = std::max(lo, 0.0);
  const double b = std::min(hi, sample.horizon());
  auto weight = [&kernel, s, h](double t) {
    return kernel(std::clamp((t - s) / h, -0.5, 0.5));
  };
  WindowData wd = collect_window(sample, weight, lo, a, b);
  FitResult res = fit_window(sample, wd, family, opts, false);
  res.weight_descr = kernel.name() + " kernel at s=" + std::to_string(s) +
                     ", h=" + std::to_string(h);
  return res;
}

namespace {

// Everything the residual path needs to outlive the sandwich call.
struct ResidualPathState {
  double a = 0, b = 0, n = 0;
  std::size_t p = 0;
  const HazardFamily* family = nullptr;  // families are owned by the caller
  std::function<double(double)> weight;
  std::vector<double> theta;
  std::vector<double> ev_times;                // failure times in (a, b]
  std::vector<std::vector<double>> ev_prefix;  // cumulative w*psi, index k = first k events
  std::vector<double> seg_lo, seg_hi;
  std::vector<int> seg_y;
  std::vector<std::vector<double>> comp_prefix;  // compensator at each seg_lo

  std::vector<double> integrand(double t) const {
    std::vector<double> ps(p);
    family->score(t, std::span<const double>(theta), ps);
    const double w = weight(t) * family->hazard(t, std::span<const double>(theta));
    for (auto& v : ps) v *= w;
    return ps;
  }

  // (1/n) int_a^t w psi (dN - Y alpha du)
  std::vector<double> eval(double t) const {
    std::vector<double> out(p, 0.0);
    if (t <= a) return out;
    const double tc = std::min(t, b);
    const auto it = std::upper_bound(seg_lo.begin(), seg_lo.end(), tc);
    if (it != seg_lo.begin()) {
      const std::size_t k = static_cast<std::size_t>(it - seg_lo.begin()) - 1;
      out = comp_prefix[k];
      const double hi = std::min(tc, seg_hi[k]);
      if (hi > seg_lo[k] && seg_y[k] > 0) {
        for (std::size_t j = 0; j < p; ++j)
          out[j] += seg_y[k] * gauss_kronrod_15(
                                   [&](double u) { return integrand(u)[j]; },
                                   seg_lo[k], hi);
      }
    }
    for (auto& v : out) v = -v;
    const auto ev =
        std::upper_bound(ev_times.begin(), ev_times.end(), tc) - ev_times.begin();
    const auto& pre = ev_prefix[static_cast<std::size_t>(ev)];
    for (std::size_t j = 0; j < p; ++j) out[j] = (out[j] + pre[j]) / n;
    return out;
  }
};

}  // namespace

SandwichMatrices sandwich(const SurvivalSample& sample, const HazardFamily& family,
                          const std::function<double(double)>& weight, double a,
                          double b, const std::vector<double>& theta_hat) {
  const std::size_t up = static_cast<std::size_t>(family.dim());
  const double n = sample.size();
  const auto& times = sample.times();
  std::span<const double> th(theta_hat);

  WindowData wd = collect_window(sample, weight, a, a, b);

  // J: model information plus the misspecification correction, with dN/Y
  // standing in for the true-hazard increments
  Matrix j_hat(up, up);
  for (std::size_t i = 0; i < up; ++i)
    for (std::size_t j = i; j < up; ++j) {
      const double v = risk_integral(sample, wd, [&](double t) {
        std::vector<double> ps(up);
        family.score(t, th, ps);
        Matrix hs;
        family.log_hessian(t, th, hs);
        return family.hazard(t, th) * (ps[i] * ps[j] + hs(i, j));
      });
      j_hat(i, j) = v / n;
      j_hat(j, i) = j_hat(i, j);
    }
  {
    Matrix hs;
    for (std::size_t k = 0; k < wd.events.size(); ++k) {
      family.log_hessian(times[wd.events[k]], th, hs);
      for (std::size_t i = 0; i < up; ++i)
        for (std::size_t j = 0; j < up; ++j)
          j_hat(i, j) -= wd.wt[k] * hs(i, j) / n;
    }
  }

  auto state = std::make_shared<ResidualPathState>();
  state->a = a;
  state->b = b;
  state->n = n;
  state->p = up;
  state->family = &family;
  state->weight = wd.weight;
  state->theta = theta_hat;
  state->ev_prefix.push_back(std::vector<double>(up, 0.0));
  {
    std::vector<double> psi(up);
    std::vector<double> run(up, 0.0);
    for (std::size_t k = 0; k < wd.events.size(); ++k) {
      const double t = times[wd.events[k]];
      family.score(t, th, psi);
      for (std::size_t j = 0; j < up; ++j) run[j] += wd.wt[k] * psi[j];
      state->ev_times.push_back(t);
      state->ev_prefix.push_back(run);
    }
  }
  {
    std::vector<double> cur(up, 0.0);
    sample.for_each_risk_segment(a, b, [&](const SurvivalSample::RiskSegment& seg) {
      state->seg_lo.push_back(seg.lo);
      state->seg_hi.push_back(seg.hi);
      state->seg_y.push_back(seg.y);
      state->comp_prefix.push_back(cur);
      if (seg.y > 0)
        for (std::size_t j = 0; j < up; ++j)
          cur[j] += seg.y * adaptive_quad(
                                [&](double t) { return state->integrand(t)[j]; },
                                seg.lo, seg.hi, kInnerTol);
    });
  }

  // M: squared-weight event part plus the psi E' + E psi' cross term
  Matrix m_hat(up, up);
  {
    std::vector<double> psi(up);
    for (std::size_t k = 0; k < wd.events.size(); ++k) {
      family.score(times[wd.events[k]], th, psi);
      for (std::size_t i = 0; i < up; ++i)
        for (std::size_t j = 0; j < up; ++j)
          m_hat(i, j) += wd.wt[k] * wd.wt[k] * psi[i] * psi[j] / n;
    }
  }
  sample.for_each_risk_segment(a, b, [&](const SurvivalSample::RiskSegment& seg) {
    for (std::size_t i = 0; i < up; ++i)
      for (std::size_t j = i; j < up; ++j) {
        const double v = gauss_kronrod_15(
            [&](double t) {
              std::vector<double> ps(up);
              family.score(t, th, ps);
              const auto e = state->eval(t);
              return wd.weight(t) * (ps[i] * e[j] + e[i] * ps[j]) *
                     family.hazard(t, th);
            },
            seg.lo, seg.hi);
        m_hat(i, j) += v;
        if (i != j) m_hat(j, i) += v;
      }
  });

  SandwichMatrices out;
  out.j_hat = j_hat;
  out.m_hat = m_hat;
  const Matrix jinv = inverse(j_hat);
  out.covariance = jinv * m_hat * jinv;
  out.covariance *= 1.0 / n;
  out.e_path = [state](double t) { return state->eval(t); };
  return out;
}

std::string fit_report_json(const std::string& family, const FitResult& fit,
                            const SandwichMatrices* sw) {
  nlohmann::json j;
  j["family"] = family;
  j["theta"] = fit.theta;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["score_residual"] = fit.score_residual;
  j["weight"] = fit.weight_descr;
  if (!fit.warning.empty()) j["warning"] = fit.warning;
  if (sw) {
    auto dump = [](const Matrix& m) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
      }
      return rows;
    };
    j["j_hat"] = dump(sw->j_hat);
    j["m_hat"] = dump(sw->m_hat);
    j["covariance"] = dump(sw->covariance);
  }
  return j.dump();
}

}  // namespace dynhaz
