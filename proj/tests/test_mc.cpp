// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/mc.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "doctest.h"
#include "heavytail/errors.hpp"
#include "heavytail/excursion.hpp"
#include "heavytail/instanton.hpp"
#include "heavytail/ou.hpp"

using namespace heavytail;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const ModelParams kQuartic{1.0, 4.0};
}  // namespace

TEST_CASE("estimate_tail handles the certain and impossible events") {
  McOptions opts;
  opts.dt = 0.05;
  const TailEstimate sure = estimate_tail(kQuartic, -kInf, 2.0, 500, 7, opts);
  CHECK(sure.n_hits == 500);
  CHECK(sure.p_hat == 1.0);
  CHECK(sure.scaled_rate == 0.0);
  CHECK_FALSE(sure.bound_only);

  const TailEstimate never = estimate_tail(kQuartic, kInf, 2.0, 500, 7, opts);
  CHECK(never.n_hits == 0);
  CHECK(never.p_hat == 0.0);
  CHECK(never.bound_only);
  // The rate bound comes from the Wilson upper limit and must be positive.
  CHECK(never.scaled_rate ==
        doctest::Approx(-std::log(wilson_interval(0, 500).hi) /
                        std::sqrt(2.0)));
  CHECK(never.scaled_rate > 0.0);
}

TEST_CASE("estimate_tail is a pure function of its inputs") {
  McOptions opts;
  opts.dt = 0.02;
  const TailEstimate a = estimate_tail(kQuartic, 0.4, 5.0, 3000, 99, opts);
  const TailEstimate b = estimate_tail(kQuartic, 0.4, 5.0, 3000, 99, opts);
  CHECK(a.n_hits == b.n_hits);
  CHECK(a.p_hat == b.p_hat);
  CHECK(a.ci.lo == b.ci.lo);
  CHECK(a.scaled_rate == b.scaled_rate);

  McOptions serial = opts;
  serial.mode = Execution::serial;
  const TailEstimate c = estimate_tail(kQuartic, 0.4, 5.0, 3000, 99, serial);
  CHECK(a.n_hits == c.n_hits);
  CHECK(a.p_hat == c.p_hat);
}

TEST_CASE("estimate_tail matches the stored-path pipeline hit for hit") {
  const double dt = 0.05, T = 2.0, x = 0.3;
  const std::uint64_t n = 64, seed = 4242;
  McOptions opts;
  opts.dt = dt;
  const TailEstimate est = estimate_tail(kQuartic, x, T, n, seed, opts);

  const TimeGrid grid{0.0, T / 40.0, 40};
  std::uint64_t hits = 0;
  for (std::uint64_t rep = 0; rep < n; ++rep) {
    const PathSample path = sample_path(kQuartic, grid, 0.0, seed, rep);
    if (time_average(path, 4.0) >= x) ++hits;
  }
  CHECK(est.n_hits == hits);
}

TEST_CASE("coupled runs are monotone across thresholds and windows") {
  McOptions opts;
  opts.dt = 0.02;
  const double T = 5.0;
  const std::uint64_t n = 4000, seed = 11;
  const TailEstimate t1 = estimate_tail(kQuartic, 0.1, T, n, seed, opts);
  const TailEstimate t2 = estimate_tail(kQuartic, 0.25, T, n, seed, opts);
  const TailEstimate t3 = estimate_tail(kQuartic, 0.5, T, n, seed, opts);
  CHECK(t1.n_hits >= t2.n_hits);
  CHECK(t2.n_hits >= t3.n_hits);

  // Window mass is bounded by the difference of the flanking tails on the
  // same paths: {lo < L < hi} is contained in {L >= lo} minus {L >= hi}.
  const double x = 0.25, delta = 0.15;
  const TailEstimate win = estimate_window(kQuartic, x, delta, T, n, seed, opts);
  const TailEstimate lo = estimate_tail(kQuartic, x - delta, T, n, seed, opts);
  const TailEstimate hi = estimate_tail(kQuartic, x + delta, T, n, seed, opts);
  CHECK(win.n_hits <= lo.n_hits - hi.n_hits);
  CHECK(win.p_hat <= lo.p_hat);
}

TEST_CASE("estimate_window certain event and drift of mass toward 0") {
  McOptions opts;
  opts.dt = 0.02;
  const TailEstimate sure =
      estimate_window(kQuartic, 0.0, kInf, 3.0, 200, 5, opts);
  CHECK(sure.p_hat == 1.0);

  // The ergodic mean is 0, so a fixed window around 0 catches more mass at
  // larger T.
  const std::uint64_t n = 4000;
  const TailEstimate small_t =
      estimate_window(kQuartic, 0.0, 0.2, 5.0, n, 21, opts);
  const TailEstimate large_t =
      estimate_window(kQuartic, 0.0, 0.2, 40.0, n, 22, opts);
  CHECK(large_t.p_hat > small_t.p_hat);
}

TEST_CASE("estimate_tail validates inputs") {
  CHECK_THROWS_AS(
      estimate_tail(kQuartic, std::numeric_limits<double>::quiet_NaN(), 1.0,
                    10, 0),
      invalid_input);
  CHECK_THROWS_AS(estimate_tail(kQuartic, 0.5, 0.0, 10, 0), invalid_input);
  CHECK_THROWS_AS(estimate_tail(kQuartic, 0.5, 1.0, 0, 0), invalid_input);
  CHECK_THROWS_AS(estimate_window(kQuartic, 0.5, 0.0, 1.0, 10, 0),
                  invalid_input);
}

TEST_CASE("single_excursion_tail agrees with the path-level decomposition") {
  const double eps0 = 0.1, dt = 0.01;
  const std::uint64_t n = 200, seed = 314;
  McOptions opts;
  opts.dt = dt;
  const double T = 100.0;

  // Rebuild each cycle from the stored-path detector on the same stream:
  // the first completed cycle must match the streamed one exactly.
  const TimeGrid grid{0.0, dt, 6000};
  std::uint64_t oracle_hits = 0;
  const double x = 0.02;
  for (std::uint64_t rep = 0; rep < n; ++rep) {
    const PathSample path = sample_path(kQuartic, grid, 0.0, seed, rep);
    const ExcursionResult res = detect_excursions(path, eps0, 4.0);
    REQUIRE(res.records.size() >= 1);
    if (res.records.front().cycle_integral / T >= x) ++oracle_hits;
  }
  const TailEstimate est =
      single_excursion_tail(kQuartic, eps0, x, T, n, seed, opts);
  CHECK(est.n_hits == oracle_hits);

  // Coupled monotonicity in the threshold.
  const TailEstimate est2 =
      single_excursion_tail(kQuartic, eps0, 2.0 * x, T, n, seed, opts);
  CHECK(est2.n_hits <= est.n_hits);

  // Impossible threshold: report only the bound.
  const TailEstimate none =
      single_excursion_tail(kQuartic, eps0, kInf, T, n, seed, opts);
  CHECK(none.n_hits == 0);
  CHECK(none.bound_only);
}

TEST_CASE("drift control interpolation and scaling") {
  DriftControl ctl;
  ctl.dt = 0.5;
  ctl.values = {0.0, 1.0, 0.5};
  CHECK(ctl.at(0.0) == 0.0);
  CHECK(ctl.at(0.25) == doctest::Approx(0.5));
  CHECK(ctl.at(0.75) == doctest::Approx(0.75));
  CHECK(ctl.at(1.0) == doctest::Approx(0.5));
  CHECK(ctl.at(1.5) == 0.0);  // beyond the covered range
  CHECK(ctl.at(-0.1) == 0.0);
  CHECK_FALSE(ctl.null_tilt());

  DriftControl zero;
  CHECK(zero.null_tilt());
  zero.dt = 1.0;
  zero.values = {0.0, 0.0};
  CHECK(zero.null_tilt());

  // (T x)^(1/p) scaling: T=16, x=1, p=4 doubles the profile.
  const std::vector<double> phi{1.0, 2.0, 0.5};
  const DriftControl scaled = scale_control(phi, 0.1, 16.0, 1.0, 4.0);
  CHECK(scaled.values[0] == doctest::Approx(2.0));
  CHECK(scaled.values[1] == doctest::Approx(4.0));
  CHECK(scaled.values[2] == doctest::Approx(1.0));
}

TEST_CASE("null tilt reproduces the naive estimator exactly") {
  McOptions opts;
  opts.dt = 0.02;
  const double x = 0.35, T = 5.0;
  const std::uint64_t n = 5000, seed = 1234;
  const TailEstimate naive = estimate_tail(kQuartic, x, T, n, seed, opts);
  const ISEstimate is =
      tilted_tail_is(kQuartic, x, T, n, seed, DriftControl{}, opts);
  CHECK(is.n_hits == naive.n_hits);
  CHECK(is.p_hat == naive.p_hat);  // bit-exact, not approximate
  CHECK(is.effective_sample_size == static_cast<double>(naive.n_hits));
  REQUIRE(is.n_hits >= 10);
  CHECK_FALSE(is.degenerate);
  CHECK(is.effective_sample_size <= static_cast<double>(n));
}

namespace {

// Smooth unit-level bump: A sech(gamma (t - t0)) with A set so the signed
// quartic integral over the window is 1; used as a hand-rolled control.
DriftControl sech_control(double gamma, double span, double dt) {
  const std::size_t n = static_cast<std::size_t>(std::llround(span / dt));
  std::vector<double> phi(n + 1);
  const double t0 = 0.5 * span;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    phi[k] = 1.0 / std::cosh(gamma * (t - t0));
  }
  // Normalize the quartic integral to 1.
  const double f4 = signed_power_integral(phi, dt, 4.0);
  const double amp = std::pow(1.0 / f4, 0.25);
  for (double& v : phi) v *= amp;
  DriftControl ctl;
  ctl.dt = dt;
  ctl.values = std::move(phi);
  return ctl;
}

}  // namespace

TEST_CASE("tilted estimate agrees with naive on a non-rare event") {
  McOptions opts;
  opts.dt = 0.02;
  const double x = 0.3, T = 10.0;
  const std::uint64_t n = 200000;
  const TailEstimate naive = estimate_tail(kQuartic, x, T, n, 555, opts);
  REQUIRE(naive.n_hits > 50);

  DriftControl ctl = sech_control(1.0, T, 0.02);
  const DriftControl scaled =
      scale_control(ctl.values, ctl.dt, T, x, 4.0);
  const ISEstimate is = tilted_tail_is(kQuartic, x, T, n, 556, scaled, opts);
  CHECK(is.effective_sample_size <= static_cast<double>(n));
  CHECK_FALSE(is.degenerate);
  // 95% intervals from independent runs of an unbiased pair overlap.
  CHECK(is.ci.lo <= naive.ci.hi);
  CHECK(naive.ci.lo <= is.ci.hi);
}

TEST_CASE("mixture of controls reduces to the single-tilt estimators") {
  McOptions opts;
  opts.dt = 0.02;
  const double T = 10.0;
  const std::uint64_t n = 20000, seed = 42;

  // One null control: same stream, unit weights, bit-equal to naive.
  const TailEstimate naive = estimate_tail(kQuartic, 0.3, T, n, seed, opts);
  const std::vector<DriftControl> null_mix{DriftControl{}};
  const ISEstimate mix0 = tilted_tail_is(
      kQuartic, 0.3, T, n, seed, std::span<const DriftControl>(null_mix), opts);
  CHECK(mix0.n_hits == naive.n_hits);
  CHECK(mix0.p_hat == naive.p_hat);
  CHECK(mix0.effective_sample_size == static_cast<double>(mix0.n_hits));

  // One real control: same sampling law as the single-control overload;
  // the weight exponent is accumulated in a different order, so allow
  // rounding error but nothing more.
  const DriftControl base = sech_control(1.0, T, 0.02);
  const DriftControl ctl = scale_control(base.values, base.dt, T, 1.5, 4.0);
  const ISEstimate single = tilted_tail_is(kQuartic, 1.5, T, n, seed, ctl, opts);
  const std::vector<DriftControl> one{ctl};
  const ISEstimate mix1 = tilted_tail_is(
      kQuartic, 1.5, T, n, seed, std::span<const DriftControl>(one), opts);
  CHECK(mix1.n_hits == single.n_hits);
  CHECK(mix1.p_hat == doctest::Approx(single.p_hat).epsilon(1e-10));

  // Input contract: at least one control, budget divisible by the count.
  const std::vector<DriftControl> empty;
  CHECK_THROWS_AS(
      tilted_tail_is(kQuartic, 0.3, T, n, seed,
                     std::span<const DriftControl>(empty), opts),
      invalid_input);
  const std::vector<DriftControl> three = shifted_controls(ctl, 3, 1.0);
  CHECK_THROWS_AS(
      tilted_tail_is(kQuartic, 0.3, T, 20000, seed,
                     std::span<const DriftControl>(three), opts),
      invalid_input);
}

TEST_CASE("shifted_controls delays copies of the base profile") {
  DriftControl base;
  base.dt = 0.5;
  base.values = {1.0, 2.0};
  const std::vector<DriftControl> copies = shifted_controls(base, 3, 1.0);
  REQUIRE(copies.size() == 3);
  CHECK(copies[0].values == std::vector<double>{1.0, 2.0});
  CHECK(copies[1].values == std::vector<double>{0.0, 0.0, 1.0, 2.0});
  CHECK(copies[2].values ==
        std::vector<double>{0.0, 0.0, 0.0, 0.0, 1.0, 2.0});
  for (const DriftControl& c : copies) CHECK(c.dt == 0.5);
  // Copy m starts at m * stride: exact grid points before that are zero.
  CHECK(copies[1].at(0.5) == 0.0);
  CHECK(copies[1].at(1.0) == doctest::Approx(1.0));
  CHECK(copies[2].at(2.5) == doctest::Approx(2.0));
}

TEST_CASE("independent seeds give overlapping tail intervals") {
  // Two disjoint streams at a probability near 1.5e-3.  Each Wilson
  // interval covers the truth at the 95% level, so the pair overlaps with
  // probability well above that; the fixed seeds make this a regression
  // check, not a flaky coin flip.
  McOptions opts;
  opts.dt = 0.01;
  const double x = 1.0, T = 100.0;
  const std::uint64_t n = 100000;
  const TailEstimate a = estimate_tail(kQuartic, x, T, n, 501, opts);
  const TailEstimate b = estimate_tail(kQuartic, x, T, n, 502, opts);
  REQUIRE(a.n_hits > 50);
  REQUIRE(b.n_hits > 50);
  CHECK(a.ci.lo <= b.ci.hi);
  CHECK(b.ci.lo <= a.ci.hi);
}

TEST_CASE("mixture importance sampling resolves a tail naive sampling misses") {
  McOptions opts;
  opts.dt = 0.02;
  const double T = 20.0;
  const InstantonSolution inst = solve_finite_horizon(kQuartic, 10.0, 500);

  // The event can sit anywhere inside [0, T], so ten copies of the optimal
  // bump delayed by 1.6 each cover the window.  A single copy pinned to one
  // position misses the translated events and underestimates by a factor of
  // several while still reporting a deceptively tight interval.
  const auto mixture = [&](double x) {
    const DriftControl base = scale_control(inst.phi, inst.grid.dt, T, x, 4.0);
    return shifted_controls(base, 10, 1.6);
  };

  // Moderate rarity: cross-check against a plain run that still sees a few
  // hundred hits on a ten-times-larger budget.
  {
    const double x = 4.0;
    const std::vector<DriftControl> controls = mixture(x);
    const ISEstimate is = tilted_tail_is(
        kQuartic, x, T, 100000, 78, std::span<const DriftControl>(controls),
        opts);
    const TailEstimate ref = estimate_tail(kQuartic, x, T, 1000000, 79, opts);
    REQUIRE(ref.n_hits > 100);
    CHECK_FALSE(is.degenerate);
    CHECK(is.effective_sample_size > 100.0);
    CHECK(is.ci.lo <= ref.ci.hi);
    CHECK(ref.ci.lo <= is.ci.hi);
    const double se_is = (is.ci.hi - is.ci.lo) / (2.0 * 1.959964);
    const double se_ref =
        std::sqrt(ref.p_hat * (1.0 - ref.p_hat) /
                  static_cast<double>(ref.n_samples));
    CHECK(std::abs(is.p_hat - ref.p_hat) <= 3.0 * std::hypot(se_is, se_ref));
  }

  // Deep tail: the same plain budget records nothing; the mixture lands
  // inside a window that brackets a 200x larger plain-sampling run made
  // while pinning these seeds (17 hits at n = 2e7, p around 8.5e-7).
  {
    const double x = 9.0;
    const TailEstimate naive = estimate_tail(kQuartic, x, T, 100000, 77, opts);
    CHECK(naive.n_hits == 0);
    CHECK(naive.bound_only);

    const std::vector<DriftControl> controls = mixture(x);
    const ISEstimate is = tilted_tail_is(
        kQuartic, x, T, 100000, 78, std::span<const DriftControl>(controls),
        opts);
    CHECK(is.n_hits > 1000);
    CHECK_FALSE(is.degenerate);
    CHECK(is.effective_sample_size > 100.0);
    CHECK(is.p_hat > 3e-7);
    CHECK(is.p_hat < 3e-6);
    CHECK(is.ci.lo > 0.0);
    CHECK(is.scaled_rate > 0.0);
  }
}

TEST_CASE("single-cycle tail rate dominates the whole-path rate") {
  // P(C_1/T >= x) needs one cycle to carry the whole T x budget, which
  // costs at least as much as the optimal whole-path profile, so the
  // scaled rate must exceed J sqrt(x) with J = 2/sqrt(3) for the quartic
  // model; the 0.6 factor leaves margin for the regeneration level and
  // step size, and the 2.0 factor catches a rate blowing up instead.
  McOptions opts;
  opts.dt = 0.01;
  const double eps0 = 0.0707, x = 0.2, T = 100.0;
  const TailEstimate est =
      single_excursion_tail(kQuartic, eps0, x, T, 1000000, 91, opts);
  REQUIRE_FALSE(est.bound_only);
  CHECK(est.p_hat > 1e-4);
  CHECK(est.p_hat < 1e-2);
  const double j_quartic = 1.1547005383792515;  // 2 / sqrt(3)
  CHECK(est.scaled_rate >= 0.6 * std::sqrt(x) * j_quartic);
  CHECK(est.scaled_rate <= 2.0 * std::sqrt(x) * j_quartic);
}

TEST_CASE("small_noise_check basics") {
  McOptions opts;
  opts.dt = 0.05;
  const std::vector<double> eps{0.5, 0.35};

  // Whole line: the certain event at every eps.
  const auto sure = small_noise_check(kQuartic, 2.0, -kInf, kInf, eps,
                                      std::uint64_t{200}, 9, opts);
  REQUIRE(sure.size() == 2);
  for (const SmallNoiseRow& row : sure) {
    CHECK(row.p_hat == 1.0);
    CHECK(row.eps2_log_p == 0.0);
    CHECK_FALSE(row.bound_only);
  }

  // Unreachable interval: bound-only rows.
  const auto never = small_noise_check(kQuartic, 2.0, 1e12, 2e12, eps,
                                       std::uint64_t{200}, 9, opts);
  for (const SmallNoiseRow& row : never) {
    CHECK(row.n_hits == 0);
    CHECK(row.bound_only);
    CHECK(row.eps2_log_p < 0.0);
  }

  // Nested intervals on the same seed: wider catches at least as much,
  // row by row.
  const auto wide = small_noise_check(kQuartic, 4.0, 0.05, 0.6, eps,
                                      std::uint64_t{4000}, 13, opts);
  const auto narrow = small_noise_check(kQuartic, 4.0, 0.1, 0.5, eps,
                                        std::uint64_t{4000}, 13, opts);
  for (std::size_t i = 0; i < wide.size(); ++i) {
    CHECK(wide[i].n_hits >= narrow[i].n_hits);
  }

  // Per-eps budgets are honored.
  const std::vector<std::uint64_t> budgets{300, 500};
  const auto rows = small_noise_check(kQuartic, 2.0, 0.01, 0.8, eps, budgets,
                                      17, opts);
  CHECK(rows[0].n_samples == 300);
  CHECK(rows[1].n_samples == 500);

  // eps_list must decrease; budgets must match.
  const std::vector<double> bad{0.35, 0.5};
  CHECK_THROWS_AS(small_noise_check(kQuartic, 2.0, 0.0, 1.0, bad,
                                    std::uint64_t{10}, 1, opts),
                  invalid_input);
  const std::vector<std::uint64_t> short_budget{10};
  CHECK_THROWS_AS(
      small_noise_check(kQuartic, 2.0, 0.0, 1.0, eps, short_budget, 1, opts),
      invalid_input);
}

TEST_CASE("rate_convergence_fit recovers a clean power-law approach") {
  std::vector<TailEstimate> est;
  for (const double T : {50.0, 100.0, 200.0, 400.0}) {
    TailEstimate e;
    e.threshold_x = 1.0;
    e.horizon_T = T;
    e.n_samples = 1000000;
    e.n_hits = 1000;
    e.scaled_rate = 1.2 - 3.0 / std::sqrt(T);
    e.scaled_rate_se = 1e-3;
    est.push_back(e);
  }
  const PowerLawFit fit = rate_convergence_fit(est);
  CHECK(fit.c == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.a == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(fit.reliable);

  std::vector<TailEstimate> two(est.begin(), est.begin() + 2);
  CHECK_THROWS_AS(rate_convergence_fit(two), insufficient_data);

  std::vector<TailEstimate> zero_hit = est;
  zero_hit[3].n_hits = 0;
  CHECK_THROWS_AS(rate_convergence_fit(zero_hit), insufficient_data);

  std::vector<TailEstimate> off_level = est;
  off_level[3].threshold_x = 2.0;
  CHECK_THROWS_AS(rate_convergence_fit(off_level), invalid_input);
}
