// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/excursion.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "heavytail/errors.hpp"
#include "heavytail/ou.hpp"
#include "heavytail/stats.hpp"

using namespace heavytail;

namespace {

PathSample make_path(std::vector<double> values, double dt) {
  TimeGrid grid(0.0, dt, values.size() - 1);
  return PathSample{grid, std::move(values), 0, 0};
}

}  // namespace

TEST_CASE("hand-traced single cycle") {
  // Upcrossing of 0.1 between samples 1 and 2; downcrossing of 0 between
  // samples 4 and 5; integrand interpolated linearly, p = 3.
  const PathSample path =
      make_path({0.0, 0.05, 0.12, 0.30, 0.10, -0.02}, 1.0);
  const ExcursionResult res = detect_excursions(path, 0.1, 3.0);
  REQUIRE(res.records.size() == 1);
  const ExcursionRecord& r = res.records[0];
  CHECK(r.depart_time == doctest::Approx(12.0 / 7.0).epsilon(1e-12));
  CHECK(r.return_time == doctest::Approx(29.0 / 6.0).epsilon(1e-12));
  CHECK(r.duration == doctest::Approx(29.0 / 6.0).epsilon(1e-12));
  CHECK(r.cycle_integral ==
        doctest::Approx(89509.0 / 3000000.0).epsilon(1e-12));
  CHECK(res.stats.remainder_integral ==
        doctest::Approx(1.2666666666666667e-05).epsilon(1e-9));
  CHECK(res.stats.n_cycles == 1);
}

TEST_CASE("path that never departs yields no cycles") {
  const PathSample path = make_path({0.0, 0.02, -0.05, 0.04, 0.01}, 1.0);
  const ExcursionResult res = detect_excursions(path, 0.1, 4.0);
  CHECK(res.records.empty());
  CHECK(res.stats.n_cycles == 0);
  // Remainder carries the full trapezoid integral.
  const double full = time_average(path, 4.0) * path.grid.span();
  CHECK(res.stats.remainder_integral == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("downcrossing before any departure does not close a cycle") {
  const PathSample path = make_path({0.0, 0.05, -0.08, 0.15, -0.03}, 1.0);
  const ExcursionResult res = detect_excursions(path, 0.1, 3.0);
  REQUIRE(res.records.size() == 1);
  // The only departure happens in cell (2,3); the earlier dip through zero
  // is part of the same cycle.
  CHECK(res.records[0].depart_time > 2.0);
  CHECK(res.records[0].return_time > 3.0);
}

TEST_CASE("decomposition identity on simulated paths") {
  const ModelParams params(1.0, 4.0);
  const TimeGrid grid(0.0, 0.01, 5000);  // T = 50
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const PathSample path = sample_path(params, grid, 0.0, 321, rep);
    const ExcursionResult res = detect_excursions(path, 0.1, 4.0);
    double total = res.stats.remainder_integral;
    double scale = std::fabs(res.stats.remainder_integral);
    for (const double c : res.stats.cycle_integrals) {
      total += c;
      scale += std::fabs(c);
    }
    const double direct = time_average(path, 4.0) * grid.span();
    CHECK(std::fabs(total - direct) <= 1e-10 * std::max(1.0, scale));
    CHECK(res.stats.n_cycles > 20);  // T=50 produces dozens of cycles
  }
}

TEST_CASE("crossing times sit strictly inside their grid cells") {
  const ModelParams params(1.0, 3.0);
  const TimeGrid grid(0.0, 0.01, 2000);
  const PathSample path = sample_path(params, grid, 0.0, 99, 3);
  const ExcursionResult res = detect_excursions(path, 0.1, 3.0);
  REQUIRE(res.records.size() > 5);
  for (const ExcursionRecord& r : res.records) {
    const double kd = (r.depart_time - grid.t_start) / grid.dt;
    const double kr = (r.return_time - grid.t_start) / grid.dt;
    CHECK(kd > std::floor(kd));
    CHECK(kr > std::floor(kr));
    CHECK(r.depart_time < r.return_time);
  }
  // Records are ordered and non-overlapping.
  for (std::size_t i = 1; i < res.records.size(); ++i) {
    CHECK(res.records[i].depart_time > res.records[i - 1].return_time);
  }
}

TEST_CASE("cycle_count from completion times") {
  CHECK(cycle_count({3.2, 7.9, 12.5}, 10.0) == 2);
  CHECK(cycle_count({}, 10.0) == 0);
  CHECK(cycle_count({3.2, 7.9, 12.5}, 12.5) == 3);
}

TEST_CASE("scaled cycle integrals divide by the horizon") {
  CycleStats stats;
  stats.cycle_integrals = {5.0, 0.0, -2.0};
  const std::vector<double> scaled = scaled_cycle_integrals(stats, 10.0);
  CHECK(scaled[0] == 0.5);
  CHECK(scaled[1] == 0.0);
  CHECK(scaled[2] == -0.2);
  CHECK_THROWS_AS(scaled_cycle_integrals(stats, 0.0), invalid_input);
}

TEST_CASE("tau statistics on a degenerate sample") {
  const TauStats s = tau_statistics({1.0, 1.0, 1.0});
  CHECK(s.duration.mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.duration.variance == 0.0);
  CHECK(s.mgf_at_1 == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(s.mgf_top_share == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(tau_statistics({1.0}), insufficient_data);
}

TEST_CASE("cycle integrals within a path are serially uncorrelated") {
  const ModelParams params(1.0, 3.0);
  const TimeGrid grid(0.0, 0.01, 100000);  // T = 1000, ~1500 cycles
  const PathSample path = sample_path(params, grid, 0.0, 2024, 0);
  const ExcursionResult res = detect_excursions(path, 0.1, 3.0);
  REQUIRE(res.stats.cycle_integrals.size() > 500);
  const double rho = lag1_autocorrelation(res.stats.cycle_integrals);
  const double n = static_cast<double>(res.stats.cycle_integrals.size());
  CHECK(std::fabs(rho) < 4.0 / std::sqrt(n));
}

TEST_CASE("mean duration grows with the departure level") {
  const ModelParams params(1.0, 4.0);
  const TimeGrid grid(0.0, 0.01, 20000);  // T = 200 per replicate
  double mean_lo = 0.0, mean_hi = 0.0;
  std::size_t n_lo = 0, n_hi = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const PathSample path = sample_path(params, grid, 0.0, 777, rep);
    const ExcursionResult a = detect_excursions(path, 0.05, 4.0);
    const ExcursionResult b = detect_excursions(path, 0.2, 4.0);
    for (const double d : a.stats.durations) mean_lo += d;
    for (const double d : b.stats.durations) mean_hi += d;
    n_lo += a.stats.n_cycles;
    n_hi += b.stats.n_cycles;
  }
  mean_lo /= static_cast<double>(n_lo);
  mean_hi /= static_cast<double>(n_hi);
  CHECK(mean_lo < mean_hi);
}

TEST_CASE("cached mean duration is reproducible and tight") {
  const ModelParams params(1.0, 4.0);
  const DurationEstimate a = mean_cycle_duration(params, 0.1);
  const DurationEstimate b = mean_cycle_duration(params, 0.1);
  CHECK(a.mean == b.mean);
  CHECK(a.n_cycles > 100000);
  // Relative CI half-width under 2 percent.
  CHECK((a.ci.hi - a.ci.lo) / 2.0 < 0.02 * a.mean);
  CHECK(a.mean > 0.1);
  CHECK(a.mean < 10.0);
}

TEST_CASE("cycle count LLN: N_T/T approaches 1/E[tau]") {
  const ModelParams params(1.0, 4.0);
  const DurationEstimate tau = mean_cycle_duration(params, 0.1);
  const double target = 1.0 / tau.mean;
  double dev100 = 0.0, dev200 = 0.0;
  const std::uint64_t reps = 40;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    const TimeGrid g100(0.0, 0.01, 10000), g200(0.0, 0.01, 20000);
    const PathSample p200 = sample_path(params, g200, 0.0, 555, rep);
    PathSample p100 = p200;
    p100.grid = g100;
    p100.values.resize(10001);
    const double r100 =
        static_cast<double>(detect_excursions(p100, 0.1, 4.0).stats.n_cycles) /
        100.0;
    const double r200 =
        static_cast<double>(detect_excursions(p200, 0.1, 4.0).stats.n_cycles) /
        200.0;
    dev100 += std::fabs(r100 - target);
    dev200 += std::fabs(r200 - target);
  }
  CHECK(dev200 < dev100);
}

TEST_CASE("cycle count deviation edge cases") {
  const ModelParams params(1.0, 4.0);
  // Huge eps_bar: the interval swallows every outcome.
  const CycleDeviation wide =
      cycle_count_deviation(params, 0.1, 1e9, 20.0, 200, 42);
  CHECK(wide.p_hat == 0.0);
  CHECK(wide.bound_only);
  CHECK(wide.n_outside == 0);
  // T = 0: deterministic by membership; the empty interval excludes 0.
  const CycleDeviation zero =
      cycle_count_deviation(params, 0.1, 0.5, 0.0, 100, 42);
  CHECK(zero.p_hat == 1.0);
  CHECK_THROWS_AS(cycle_count_deviation(params, -0.1, 0.5, 10.0, 10, 1),
                  invalid_input);
  CHECK_THROWS_AS(cycle_count_deviation(params, 0.1, -0.5, 10.0, 10, 1),
                  invalid_input);
}

TEST_CASE("cycle count deviation decays between horizons") {
  // Moderate budget smoke version of the concentration trend: p at T=30
  // exceeds p at T=60 (counts concentrate), both estimated from the same
  // seed with comfortable margins.
  const ModelParams params(1.0, 4.0);
  const CycleDeviation a =
      cycle_count_deviation(params, 0.1, 0.35 / 0.65, 30.0, 4000, 7);
  const CycleDeviation b =
      cycle_count_deviation(params, 0.1, 0.35 / 0.65, 60.0, 4000, 7);
  CHECK(a.p_hat > 0.0);
  CHECK(a.log_rate < 0.0);
  CHECK(b.p_hat < a.p_hat);
}

TEST_CASE("input validation") {
  const PathSample path = make_path({0.0, 0.2, -0.1}, 1.0);
  CHECK_THROWS_AS(detect_excursions(path, -0.1, 3.0), invalid_input);
  CHECK_THROWS_AS(detect_excursions(path, 0.0, 3.0), invalid_input);
  PathSample shifted = make_path({0.5, 0.2, -0.1}, 1.0);
  CHECK_THROWS_AS(detect_excursions(shifted, 0.1, 3.0), invalid_input);
}
