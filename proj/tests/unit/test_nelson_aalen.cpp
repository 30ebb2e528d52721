#include <doctest.h>

#include <cmath>
#include <random>

#include "dynhaz/nelson_aalen.hpp"
#include "oracle.hpp"

using dynhaz::Kernel;
using dynhaz::SurvivalSample;

namespace {

SurvivalSample d3() {
  return SurvivalSample::from_observations({{1, 1}, {2, 1}, {3, 1}});
}

SurvivalSample d4() {
  return SurvivalSample::from_observations({{1, 1}, {2, 0}, {3, 1}, {4, 0}});
}

}  // namespace

TEST_CASE("hand-computed cumulative hazard steps") {
  const auto path = dynhaz::nelson_aalen(d3());
  CHECK(path.evaluate(0) == doctest::Approx(0.0));
  CHECK(path.evaluate(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(path.evaluate(2) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  CHECK(path.evaluate(3) == doctest::Approx(11.0 / 6.0).epsilon(1e-14));
  CHECK(path.evaluate(2.5) == doctest::Approx(5.0 / 6.0));

  const auto p4 = dynhaz::nelson_aalen(d4());
  CHECK(p4.evaluate(3) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("path is nondecreasing with one jump per failure") {
  std::mt19937_64 gen(3);
  const auto s = oracle::random_sample(gen, 80, 4.0, 0.35);
  const auto path = dynhaz::nelson_aalen(s);
  CHECK(static_cast<int>(path.jump_times.size()) == s.total_failures());
  for (std::size_t i = 1; i < path.cumulative.size(); ++i)
    CHECK(path.cumulative[i] >= path.cumulative[i - 1]);
}

TEST_CASE("smoothed hazard hand values") {
  const auto s = d3();
  CHECK(dynhaz::smoothed_hazard(s, Kernel::uniform(), 2.0, 2.0) ==
        doctest::Approx(0.75).epsilon(1e-14));
  CHECK(dynhaz::smoothed_hazard(s, Kernel::epanechnikov(), 2.0, 2.0) ==
        doctest::Approx(0.375).epsilon(1e-14));
  CHECK(dynhaz::smoothed_hazard(s, Kernel::epanechnikov(), 2.0, 10.0) == 0.0);
}

TEST_CASE("uniform kernel smoothing equals cumulative increments exactly") {
  std::mt19937_64 gen(17);
  const auto s = oracle::random_sample(gen, 50, 3.0, 0.25);
  const auto path = dynhaz::nelson_aalen(s);
  std::uniform_real_distribution<double> us(0.0, 3.0), uh(0.05, 1.5);
  for (int k = 0; k < 200; ++k) {
    const double at = us(gen), h = uh(gen);
    const double lhs = dynhaz::smoothed_hazard(s, Kernel::uniform(), h, at);
    const double rhs =
        (path.evaluate(at + 0.5 * h) - path.evaluate(at - 0.5 * h)) / h;
    REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-14));
  }
  // boundary membership: the jump at the lower window edge is excluded,
  // the one at the upper edge included
  CHECK(dynhaz::smoothed_hazard(d3(), Kernel::uniform(), 2.0, 2.0) ==
        doctest::Approx(0.75).epsilon(1e-14));
}
