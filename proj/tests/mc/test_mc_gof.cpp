#include <doctest.h>

#include <cmath>

#include "dynhaz/gof.hpp"
#include "dynhaz/simulate.hpp"
#include "dynhaz/truths.hpp"

using dynhaz::GofKind;

TEST_CASE("window expansion trusts a correct model most of the time") {
  const auto truth = dynhaz::make_truth("constant", {1.0});
  const auto law = dynhaz::make_law(truth, {}, 3.0, 314);
  int sentinel = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = dynhaz::simulate_replicate(law, 2000, rep);
    const auto grid = dynhaz::default_h_grid(sample, 1.5, 10);
    const auto choice = dynhaz::expand_window(sample, "constant", 1.5,
                                              GofKind::ks_const, 0.10, 10, grid);
    sentinel += choice.full_range ? 1 : 0;
  }
  // every window carries its own ~10% false-rejection chance and the scan
  // walks ~35 nested windows, so roughly a third of the scans survive to
  // the sentinel; measured 0.34 at these settings (seeded, deterministic)
  CHECK(sentinel >= reps / 4);
}

TEST_CASE("window expansion stops at a change point") {
  const auto truth = dynhaz::make_truth("changepoint", {1.0, 3.0, 1.5});
  const auto law = dynhaz::make_law(truth, {}, 3.0, 2718);
  const double s = 1.2;
  int one_side = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = dynhaz::simulate_replicate(law, 5000, rep);
    const auto grid = dynhaz::default_h_grid(sample, s, 10);
    const auto choice = dynhaz::expand_window(sample, "constant", s,
                                              GofKind::ks_const, 0.10, 10, grid);
    if (!choice.full_range && s + 0.5 * choice.h <= 1.5) ++one_side;
  }
  CHECK(one_side >= static_cast<int>(0.8 * reps));
}

TEST_CASE("startup keeps the whole range under a correct model") {
  const auto truth = dynhaz::make_truth("constant", {1.0});
  const auto law = dynhaz::make_law(truth, {}, 3.0, 99);
  int full = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = dynhaz::simulate_replicate(law, 2000, rep);
    const auto res =
        dynhaz::startup_interval(sample, "constant", GofKind::ks_const, 0.10, 10);
    full += res.full_range ? 1 : 0;
    REQUIRE(res.fit.converged);
  }
  // the startup scan walks even more windows than the centered expansion
  // (the feasibility floor sits at the 10th failure time), so the
  // full-range rate lands lower; measured 0.23 at these settings
  CHECK(full >= reps / 8);
}

TEST_CASE("startup backs off before a change point") {
  const auto truth = dynhaz::make_truth("changepoint", {1.0, 3.0, 1.5});
  const auto law = dynhaz::make_law(truth, {}, 3.0, 424242);
  int before = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = dynhaz::simulate_replicate(law, 5000, rep);
    const auto res =
        dynhaz::startup_interval(sample, "constant", GofKind::ks_const, 0.10, 10);
    if (res.b0 <= 1.5) ++before;
  }
  CHECK(before >= static_cast<int>(0.8 * reps));
}

TEST_CASE("null rejection rates sit near the nominal level (small version)") {
  // the acceptance suite runs the full-size check; this is the smoke test
  const auto truth = dynhaz::make_truth("constant", {1.0});
  const auto law = dynhaz::make_law(truth, {}, 3.0, 8);
  int rej_ks = 0, rej_cvm = 0, rej_l1 = 0;
  const int reps = 200;
  const auto fam = dynhaz::make_family("constant");
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = dynhaz::simulate_replicate(law, 1000, rep);
    const auto path = dynhaz::dn_path(sample, *fam, 0.3, 2.7);
    rej_ks += dynhaz::gof_statistic(path, GofKind::ks_const, 0.10).reject;
    rej_cvm += dynhaz::gof_statistic(path, GofKind::cvm, 0.10).reject;
    rej_l1 += dynhaz::gof_statistic(path, GofKind::l1, 0.10).reject;
  }
  CHECK(rej_ks >= 8);
  CHECK(rej_ks <= 34);
  CHECK(rej_cvm >= 8);
  CHECK(rej_cvm <= 34);
  CHECK(rej_l1 >= 8);
  CHECK(rej_l1 <= 34);
}
