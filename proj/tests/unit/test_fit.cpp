#include <doctest.h>

#include <cmath>
#include <random>

#include "dynhaz/error.hpp"
#include "dynhaz/fit.hpp"
#include "dynhaz/simulate.hpp"
#include "dynhaz/linalg.hpp"
#include "oracle.hpp"

using dynhaz::FitOptions;
using dynhaz::HazardFamily;
using dynhaz::Matrix;
using dynhaz::SurvivalSample;

namespace {

SurvivalSample d3() {
  return SurvivalSample::from_observations({{1, 1}, {2, 1}, {3, 1}});
}

const auto unit_weight = [](double) { return 1.0; };

}  // namespace

TEST_CASE("constant family closed form: occurrence over exposure") {
  const auto s = d3();
  const auto fam = dynhaz::make_family("constant");
  const auto fit = dynhaz::fit_weighted_mle(s, *fam, unit_weight, 0.0, 3.0);
  REQUIRE(fit.converged);
  CHECK(fit.theta[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fit.score_residual <= 1e-8);

  // same through the exact-interval path
  const auto fit2 = dynhaz::fit_interval_mle(s, *fam, 0.0, 3.0);
  CHECK(fit2.theta[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("degenerate weights raise empty window") {
  const auto s = d3();
  const auto fam = dynhaz::make_family("constant");
  CHECK_THROWS_WITH_AS(
      dynhaz::fit_weighted_mle(s, *fam, [](double) { return 0.0; }, 0.0, 3.0),
      doctest::Contains("empty window"), dynhaz::Error);
  CHECK_THROWS_AS(dynhaz::fit_interval_mle(s, *fam, 3.5, 4.0), dynhaz::Error);
}

TEST_CASE("score and hessian agree with finite differences of log hazard") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> ut(0.3, 2.5);
  for (const std::string name : {"constant", "gompertz", "weibull", "frailty"}) {
    for (const bool local : {false, true}) {
      const auto fam = local ? dynhaz::make_local_family(name, 1.3)
                             : dynhaz::make_family(name);
      const int p = fam->dim();
      for (int rep = 0; rep < 20; ++rep) {
        const double t = ut(gen);
        std::vector<double> th{0.4 + 1.5 * ut(gen) / 2.5, 0.0};
        th.resize(static_cast<std::size_t>(p));
        if (p > 1)
          th[1] = (name == "frailty") ? 0.7 * ut(gen) / 2.5
                  : (name == "weibull" && !local) ? 0.8 + ut(gen) / 2.5
                                                  : 0.8 * (ut(gen) / 2.5 - 0.5);
        auto logh = [&](std::vector<double> q) {
          return std::log(fam->hazard(t, q));
        };
        std::vector<double> psi(static_cast<std::size_t>(p));
        fam->score(t, th, psi);
        Matrix hess;
        fam->log_hessian(t, th, hess);
        for (int j = 0; j < p; ++j) {
          const std::size_t ju = static_cast<std::size_t>(j);
          const double eps = 1e-6 * std::max(1.0, std::abs(th[ju]));
          auto up = th, dn = th;
          up[ju] += eps;
          dn[ju] -= eps;
          const double fd = (logh(up) - logh(dn)) / (2 * eps);
          REQUIRE(psi[ju] == doctest::Approx(fd).epsilon(1e-6));
          // wider step for the second difference (roundoff)
          const double eps2 = 1e-4 * std::max(1.0, std::abs(th[ju]));
          auto up2 = th, dn2 = th;
          up2[ju] += eps2;
          dn2[ju] -= eps2;
          const double fd2 =
              (logh(up2) - 2 * logh(th) + logh(dn2)) / (eps2 * eps2);
          REQUIRE(hess(ju, ju) == doctest::Approx(fd2).epsilon(1e-5));
        }
      }
    }
  }
}

TEST_CASE("cumulative hazard matches quadrature of the hazard") {
  std::mt19937_64 gen(4);
  for (const std::string name : {"constant", "gompertz", "weibull", "frailty"}) {
    const auto fam = dynhaz::make_local_family(name, 0.9);
    std::vector<double> th{1.4, 0.0};
    th.resize(static_cast<std::size_t>(fam->dim()));
    if (fam->dim() > 1) th[1] = name == "frailty" ? 0.6 : 0.4;
    for (double t : {0.5, 1.0, 2.2}) {
      const double direct = fam->cumulative(t, th);
      const double quad = oracle::simpson(
          [&](double u) { return fam->hazard(u, th); }, 0.0, t, 1e-12);
      REQUIRE(direct == doctest::Approx(quad).epsilon(1e-9));
    }
  }
}

TEST_CASE("shape antiderivatives differentiate correctly") {
  // d/dbeta of int gamma matches finite differences (drives the profile)
  for (const std::string name : {"gompertz", "weibull", "frailty"}) {
    const auto fam = dynhaz::make_local_family(name, 1.1);
    for (double beta : {0.0, 0.3, 0.9}) {
      if (name == "weibull" && beta == 0.0) continue;
      for (double t : {0.4, 1.1, 2.0}) {
        const double eps = 1e-6;
        const double fd = (fam->gamma_antideriv(t, beta + eps) -
                           fam->gamma_antideriv(t, beta - eps)) /
                          (2 * eps);
        REQUIRE(fam->gamma_antideriv_dbeta(t, beta) ==
                doctest::Approx(fd).epsilon(1e-6));
        // and int gamma itself against quadrature (signed, from the anchor)
        const double lo = std::min(fam->anchor(), t), hi = std::max(fam->anchor(), t);
        const double quad =
            (t >= fam->anchor() ? 1.0 : -1.0) *
            oracle::simpson([&](double u) { return fam->gamma(u, beta); }, lo, hi,
                            1e-12);
        REQUIRE(fam->gamma_antideriv(t, beta) == doctest::Approx(quad).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("reparametrization consistency of the running exponential slope") {
  // the global (a, b) form and the window-local (theta, b) form must give
  // the same fitted hazard function
  dynhaz::SimulationLaw law;
  law.true_hazard = [](double t) { return 0.8 * std::exp(0.5 * t); };
  law.horizon = 2.0;
  law.seed = 31;
  const auto sample = dynhaz::simulate(law, 2000);
  const double s = 1.2;
  const auto global = dynhaz::make_family("gompertz");
  const auto local = dynhaz::make_local_family("gompertz", s);
  const auto fg = dynhaz::fit_interval_mle(sample, *global, 0.4, 2.0);
  const auto fl = dynhaz::fit_interval_mle(sample, *local, 0.4, 2.0);
  REQUIRE(fg.converged);
  REQUIRE(fl.converged);
  CHECK(fl.theta[0] ==
        doctest::Approx(fg.theta[0] * std::exp(fg.theta[1] * s)).epsilon(1e-6));
  for (double t : {0.5, 1.0, 1.7})
    CHECK(global->hazard(t, fg.theta) ==
          doctest::Approx(local->hazard(t, fl.theta)).epsilon(1e-6));
}

TEST_CASE("frailty shape sits on its boundary for increasing hazards") {
  dynhaz::SimulationLaw law;
  law.true_hazard = [](double t) { return 0.5 * std::exp(0.9 * t); };
  law.horizon = 2.0;
  law.seed = 77;
  const auto sample = dynhaz::simulate(law, 3000);
  const auto fam = dynhaz::make_family("frailty");
  const auto fit = dynhaz::fit_interval_mle(sample, *fam, 0.0, 2.0);
  CHECK(fit.theta[1] == doctest::Approx(0.0));
  CHECK(fit.warning.find("boundary") != std::string::npos);
}

TEST_CASE("sandwich pieces: hand value, residual endpoints, psd") {
  const auto s = d3();
  const auto fam = dynhaz::make_family("constant");
  const auto fit = dynhaz::fit_interval_mle(s, *fam, 0.0, 3.0);
  const auto sw = dynhaz::sandwich(s, *fam, unit_weight, 0.0, 3.0, fit.theta);
  CHECK(sw.j_hat(0, 0) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(std::abs(sw.e_path(0.0)[0]) < 1e-12);
  CHECK(std::abs(sw.e_path(3.0)[0]) < 1e-10);
  const auto ev = dynhaz::symmetric_eigenvalues(sw.covariance);
  for (double v : ev) CHECK(v >= -1e-10 * std::abs(sw.covariance.trace()));
}

TEST_CASE("singular systems fail loudly with a condition estimate") {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(1, 0) = 2.0;
  m(1, 1) = 4.0;
  CHECK_THROWS_WITH_AS(dynhaz::solve(m, {1.0, 1.0}),
                       doctest::Contains("condition"), dynhaz::Error);
}

TEST_CASE("fit reports serialize") {
  const auto s = d3();
  const auto fam = dynhaz::make_family("constant");
  const auto fit = dynhaz::fit_interval_mle(s, *fam, 0.0, 3.0);
  const auto sw = dynhaz::sandwich(s, *fam, unit_weight, 0.0, 3.0, fit.theta);
  const std::string json = dynhaz::fit_report_json("constant", fit, &sw);
  CHECK(json.find("\"theta\":[0.5]") != std::string::npos);
  CHECK(json.find("\"converged\":true") != std::string::npos);
  CHECK(json.find("\"covariance\"") != std::string::npos);
}

TEST_CASE("newton path agrees with the profile path") {
  dynhaz::SimulationLaw law;
  law.true_hazard = [](double t) { return 1.0 + 0.5 * t; };
  law.horizon = 2.0;
  law.seed = 13;
  const auto sample = dynhaz::simulate(law, 1500);
  const auto fam = dynhaz::make_local_family("gompertz", 1.0);
  FitOptions newton;
  newton.method = FitOptions::Method::newton;
  const auto f1 = dynhaz::fit_interval_mle(sample, *fam, 0.2, 1.8);
  const auto f2 = dynhaz::fit_interval_mle(sample, *fam, 0.2, 1.8, newton);
  REQUIRE(f1.converged);
  REQUIRE(f2.converged);
  CHECK(f1.theta[0] == doctest::Approx(f2.theta[0]).epsilon(1e-6));
  CHECK(f1.theta[1] == doctest::Approx(f2.theta[1]).epsilon(1e-4));
}
