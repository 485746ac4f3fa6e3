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
#include <vector>

#include "heavytail/model.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/stats.hpp"

namespace heavytail {

// One regeneration cycle: from the previous return to the origin (or from
// t_start for the first cycle), up through the level eps0, and back to the
// origin.  Crossing times are linearly interpolated inside grid cells.
struct ExcursionRecord {
  double depart_time = 0.0;     // first upcrossing of eps0 within the cycle
  double return_time = 0.0;     // subsequent downcrossing of 0 (cycle end)
  double cycle_integral = 0.0;  // integral of sgn(x)|x|^p over the cycle
  double duration = 0.0;        // cycle end minus cycle start
};

struct CycleStats {
  std::size_t n_cycles = 0;          // completed cycles within the horizon
  double remainder_integral = 0.0;   // integral after the last completed cycle
  double mean_duration = 0.0;        // 0 when no cycle completed
  std::vector<double> durations;
  std::vector<double> cycle_integrals;
};

struct ExcursionResult {
  std::vector<ExcursionRecord> records;
  CycleStats stats;
};

// Decompose a path starting at 0 into regeneration cycles.  The cycle
// integrals use the piecewise-linear interpolant of the integrand sampled
// at grid points, split exactly at interpolated crossing times, so that
// sum(cycle integrals) + remainder equals the trapezoid integral of the
// whole path to rounding accuracy.
ExcursionResult detect_excursions(const PathSample& path, double eps0,
                                  double p);

// Number of cycles completed by time T given their completion times.
std::size_t cycle_count(const std::vector<double>& completion_times, double T);

// Cycle integrals divided by T (the natural normalization under which a
// single cycle can carry an order-one share of the time average).
std::vector<double> scaled_cycle_integrals(const CycleStats& stats, double T);

// Sample statistics of cycle durations, including the empirical moment
// generating function at 1.  The MGF of a heavy-ish tailed sample is
// dominated by its largest terms; mgf_top_share reports the share of the
// largest single term so callers can judge how trustworthy the estimate is.
struct TauStats {
  MeanVar duration;
  double mgf_at_1 = 0.0;
  Interval mgf_ci;
  double mgf_top_share = 0.0;
};

TauStats tau_statistics(const std::vector<double>& durations);

// High-precision estimate of the mean cycle duration for (gamma, eps0),
// computed once per parameter pair with a fixed internal seed and cached.
struct DurationEstimate {
  double mean = 0.0;
  Interval ci;
  std::uint64_t n_cycles = 0;
};

DurationEstimate mean_cycle_duration(const ModelParams& params, double eps0);

// Monte Carlo estimate of P(N_T outside (T(1/E[tau] - eps_bar),
// T(1/E[tau] + eps_bar))), the cycle-count concentration probability,
// together with the empirical exponent log(p_hat)/T.
struct CycleDeviation {
  double p_hat = 0.0;
  double log_rate = 0.0;        // log(p_hat)/T, or log(ci.hi)/T when no hits
  bool bound_only = false;      // true when n_outside == 0
  std::uint64_t n_outside = 0;
  std::uint64_t n_replicates = 0;
  Interval ci;
  double interval_lo = 0.0;     // the interval tested, in cycle counts
  double interval_hi = 0.0;
  double mean_tau = 0.0;        // the cached estimate used to center it
};

CycleDeviation cycle_count_deviation(const ModelParams& params, double eps0,
                                     double eps_bar, double T,
                                     std::uint64_t n_replicates,
                                     std::uint64_t seed,
                                     Execution mode = Execution::openmp);

}  // namespace heavytail
