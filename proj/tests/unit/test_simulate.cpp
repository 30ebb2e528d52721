#include <doctest.h>

#include <cmath>

#include "dynhaz/error.hpp"
#include "dynhaz/simulate.hpp"

using dynhaz::SimulationLaw;

namespace {

SimulationLaw constant_law(double theta, double horizon, std::uint64_t seed) {
  SimulationLaw law;
  law.true_hazard = [theta](double) { return theta; };
  law.horizon = horizon;
  law.seed = seed;
  return law;
}

}  // namespace

TEST_CASE("no censoring means every status is 1") {
  const auto s = dynhaz::simulate(constant_law(1.0, 2.0, 42), 500);
  int censored_before_horizon = 0;
  for (int i = 0; i < s.size(); ++i)
    if (!s.statuses()[i] && s.times()[i] < 2.0) ++censored_before_horizon;
  CHECK(censored_before_horizon == 0);  // only horizon truncation censors
}

TEST_CASE("same seed reproduces the sample exactly") {
  const auto a = dynhaz::simulate(constant_law(1.3, 3.0, 99), 200);
  const auto b = dynhaz::simulate(constant_law(1.3, 3.0, 99), 200);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.times()[i] == b.times()[i]);
    CHECK(a.statuses()[i] == b.statuses()[i]);
  }
  const auto c = dynhaz::simulate(constant_law(1.3, 3.0, 100), 200);
  bool differs = false;
  for (int i = 0; i < a.size() && !differs; ++i)
    differs = a.times()[i] != c.times()[i];
  CHECK(differs);
}

TEST_CASE("unit-rate mean matches the truncated-exponential expectation") {
  // E min(X0, T) = 1 - e^{-T} for a unit exponential
  const auto s = dynhaz::simulate(constant_law(1.0, 10.0, 7), 100000);
  double mean = 0;
  for (double t : s.times()) mean += t;
  mean /= s.size();
  CHECK(std::abs(mean - (1.0 - std::exp(-10.0))) < 0.02);
}

TEST_CASE("both beyond horizon records (T, 0)") {
  SimulationLaw law = constant_law(0.05, 1.0, 3);  // nearly everyone survives
  const auto s = dynhaz::simulate(law, 300);
  int at_horizon = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s.times()[i] == 1.0 && s.statuses()[i] == 0) ++at_horizon;
  CHECK(at_horizon > 250);
  CHECK(s.times().back() <= 1.0);
}

TEST_CASE("censoring hazard produces a mix") {
  SimulationLaw law = constant_law(1.0, 4.0, 8);
  law.censoring_hazard = [](double) { return 1.0; };
  const auto s = dynhaz::simulate(law, 4000);
  int failures = 0;
  for (int st : s.statuses()) failures += st;
  // equal competing rates: about half the events are failures
  CHECK(failures > 1700);
  CHECK(failures < 2300);
}

TEST_CASE("replicate streams differ and are reproducible") {
  const SimulationLaw law = constant_law(1.0, 2.0, 555);
  const auto r0 = dynhaz::simulate_replicate(law, 50, 0);
  const auto r1 = dynhaz::simulate_replicate(law, 50, 1);
  const auto r0b = dynhaz::simulate_replicate(law, 50, 0);
  CHECK(r0.times() == r0b.times());
  CHECK(r0.times() != r1.times());
  CHECK(dynhaz::split_seed(1, 0) != dynhaz::split_seed(1, 1));
  CHECK(dynhaz::split_seed(1, 0) != dynhaz::split_seed(2, 0));
}

TEST_CASE("inverse sampling hits a nonconstant cumulative accurately") {
  // quadratic hazard: A(t) = t + t^3/3; compare the sampler's cumulative
  SimulationLaw law;
  law.true_hazard = [](double t) { return 1.0 + t * t; };
  law.horizon = 2.0;
  law.seed = 1;
  dynhaz::HazardSampler sampler(law.true_hazard, law.horizon);
  for (double t : {0.3, 0.9, 1.5, 2.0})
    CHECK(sampler.cumulative(t) == doctest::Approx(t + t * t * t / 3.0).epsilon(1e-10));
  CHECK_THROWS_AS(dynhaz::HazardSampler([](double) { return -1.0; }, 1.0),
                  dynhaz::Error);
}
