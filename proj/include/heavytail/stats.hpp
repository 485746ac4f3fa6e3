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

namespace heavytail {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t hits, std::uint64_t n,
                         double z = kZ95);

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n-1 denominator
  std::uint64_t n = 0;
  double se() const;
};

MeanVar mean_variance(const std::vector<double>& xs);

// Lag-1 sample autocorrelation.
double lag1_autocorrelation(const std::vector<double>& xs);

// Least squares fit of y ~ a + b * exp(-beta * h) with beta scanned on a
// log grid and polished; robust to b ~ 0 (flat data).
struct ExpDecayFit {
  double a = 0.0;
  double b = 0.0;
  double beta = 0.0;
  double rms = 0.0;
};

ExpDecayFit fit_exp_decay(const std::vector<double>& h,
                          const std::vector<double>& y);

// Least squares fit of y ~ a + b * t^(-c) with c scanned over (0, 1] and
// polished.  `reliable` is cleared when the data are not monotone beyond
// `noise` per step.
struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.5;
  double rms = 0.0;
  bool reliable = true;
};

PowerLawFit fit_power_approach(const std::vector<double>& t,
                               const std::vector<double>& y,
                               const std::vector<double>& noise = {});

}  // namespace heavytail
