// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "heavytail/model.hpp"
#include "heavytail/ou.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/stats.hpp"

namespace heavytail {

// Monte Carlo probability estimate with a Wilson interval and the scaled
// rate r = -T^(-2/p) log p_hat.  With zero hits, scaled_rate is computed
// from ci.hi instead and bound_only is set; the true rate can only be
// larger than that bound.
struct TailEstimate {
  double threshold_x = 0.0;
  double horizon_T = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_hits = 0;
  double p_hat = 0.0;
  Interval ci;
  double scaled_rate = 0.0;
  double scaled_rate_se = 0.0;
  bool bound_only = false;
};

struct McOptions {
  double dt = 0.0;  // <= 0: use 0.01 / gamma
  StepScheme scheme = StepScheme::exact;
  Execution mode = Execution::openmp;
};

// P(L_T >= x) where L_T is the time average of sgn(X)|X|^p along a path
// started at 0.  Runs with the same (seed, T, n_samples, dt) share paths,
// so estimates are coupled sample-by-sample across thresholds; x = -inf is
// the certain event, x = +inf the impossible one.
TailEstimate estimate_tail(const ModelParams& params, double x, double T,
                           std::uint64_t n_samples, std::uint64_t seed,
                           const McOptions& opts = {});

// P(x - delta < L_T < x + delta) with the same coupling rules.
TailEstimate estimate_window(const ModelParams& params, double x, double delta,
                             double T, std::uint64_t n_samples,
                             std::uint64_t seed, const McOptions& opts = {});

// P(C_1 / T >= x) over independent regeneration cycles started at 0 (rise
// through eps0, return to 0); C_1 is the cycle integral of sgn(x)|x|^p and
// the scaled rate uses the same T^(-2/p) normalization as the full average.
TailEstimate single_excursion_tail(const ModelParams& params, double eps0,
                                   double x, double T, std::uint64_t n_cycles,
                                   std::uint64_t seed,
                                   const McOptions& opts = {});

// Deterministic mean path for importance sampling, sampled on its own
// uniform grid starting at t = 0; zero outside the covered range.  The tilt
// adds the exact one-step increment of this path to each transition and
// carries the likelihood weight, so a null control reproduces the naive
// estimator exactly.
struct DriftControl {
  double dt = 0.0;
  std::vector<double> values;

  bool null_tilt() const;
  double at(double t) const;
};

// Control path c * phi with c = (T x)^(1/p), the amplitude that makes a
// unit-level profile carry the event L_T >= x.
DriftControl scale_control(std::span<const double> phi, double dt, double T,
                           double x, double p);

// Importance-sampling estimate.  p_hat is the unbiased weighted mean; the
// interval is the normal approximation from the weighted-indicator variance.
// effective_sample_size is the Kish size of the weights landing on hits.
struct ISEstimate {
  double threshold_x = 0.0;
  double horizon_T = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_hits = 0;
  double p_hat = 0.0;
  Interval ci;
  double effective_sample_size = 0.0;
  double weight_variance = 0.0;
  bool degenerate = false;  // effective sample size below 10
  double scaled_rate = 0.0;
  double scaled_rate_se = 0.0;
  bool bound_only = false;
};

ISEstimate tilted_tail_is(const ModelParams& params, double x, double T,
                          std::uint64_t n_samples, std::uint64_t seed,
                          const DriftControl& control,
                          const McOptions& opts = {});

// Mixture proposal: replicate r simulates under controls[r mod M] and is
// weighted against the uniform mixture of all M tilted laws (balance
// heuristic), so a path reachable by any one control keeps a bounded
// weight.  A single tilt misses events that can occur anywhere inside a
// long window; shifted copies of one profile restore that translation
// freedom.  n_samples must be a multiple of controls.size().
ISEstimate tilted_tail_is(const ModelParams& params, double x, double T,
                          std::uint64_t n_samples, std::uint64_t seed,
                          std::span<const DriftControl> controls,
                          const McOptions& opts = {});

// M copies of `base` delayed by 0, stride, ..., (M-1) stride, each zero
// before its start.
std::vector<DriftControl> shifted_controls(const DriftControl& base,
                                           std::size_t n_shifts,
                                           double stride);

// One row of the small-noise table: the event is the aggregate integral of
// sgn(x)|x|^p over [0, H] landing strictly inside (x_lo, x_hi) for the
// process dX = -gamma X dt + eps dW.
struct SmallNoiseRow {
  double eps = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_hits = 0;
  double p_hat = 0.0;
  double eps2_log_p = 0.0;  // eps^2 log p_hat; from ci.hi when bound_only
  double se = 0.0;          // standard error of eps2_log_p
  bool bound_only = false;
};

// Direct simulation at each eps (rows use independent derived substreams).
std::vector<SmallNoiseRow> small_noise_check(
    const ModelParams& params, double H, double x_lo, double x_hi,
    std::span<const double> eps_list, std::span<const std::uint64_t> budgets,
    std::uint64_t seed, const McOptions& opts = {});

// Same budget for every eps.
std::vector<SmallNoiseRow> small_noise_check(const ModelParams& params,
                                             double H, double x_lo,
                                             double x_hi,
                                             std::span<const double> eps_list,
                                             std::uint64_t n_samples,
                                             std::uint64_t seed,
                                             const McOptions& opts = {});

// Least-squares fit scaled_rate(T) = a + b T^(-c) across horizons at a
// common threshold; a estimates the large-T limit of the scaled rate.
// Requires at least three horizons, each with hits.
PowerLawFit rate_convergence_fit(std::span<const TailEstimate> estimates);

}  // namespace heavytail
