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

#include <cmath>
#include <cstdint>
#include <span>

#include "heavytail/model.hpp"

namespace heavytail {

// One-step conditional law of the mean-reverting diffusion: X_{t+dt} | X_t=x
// is Gaussian with these parameters.  Sampling through this transition is
// exact in distribution for any dt; no discretization scheme is involved.
struct OUTransition {
  double mean = 0.0;
  double variance = 0.0;
};

OUTransition ou_transition(double x, double dt, double gamma);

// Precomputed coefficients of the exact update X' = decay * X + noise * Z
// with Z standard normal; noise absorbs noise_scale.
struct ExactStep {
  double decay = 0.0;
  double noise = 0.0;
};

ExactStep exact_step(double gamma, double dt, double noise_scale = 1.0);

enum class StepScheme {
  exact,  // Gaussian transition, unbiased at any dt
  euler   // explicit Euler-Maruyama, kept as a cross-check
};

// Simulate on `grid` from x0 with Gaussian increments drawn from the
// counter-based stream keyed by (seed, replicate_id, step).  noise_scale
// multiplies the driving noise (1 = unit diffusion).
PathSample sample_path(const ModelParams& params, const TimeGrid& grid,
                       double x0, std::uint64_t seed,
                       std::uint64_t replicate_id,
                       StepScheme scheme = StepScheme::exact,
                       double noise_scale = 1.0);

// Signed power observable sgn(x) |x|^p.
double signed_power(double x, double p);

// Callable form with fast paths for small integer p; use in tight loops.
class SignedPower {
 public:
  explicit SignedPower(double p);
  double operator()(double x) const {
    switch (kind_) {
      case Kind::cube:
        return x * x * x;
      case Kind::quartic: {
        const double x2 = x * x;
        return std::copysign(x2 * x2, x);
      }
      default:
        return x == 0.0 ? 0.0 : std::copysign(std::pow(std::fabs(x), p_), x);
    }
  }

 private:
  enum class Kind { cube, quartic, general };
  Kind kind_;
  double p_;
};

// Trapezoid average of sgn(x)|x|^p along the path, divided by the time span.
double time_average(const PathSample& path, double p);

// Divide path values by T^(1/p); the natural normalization that puts the
// time average of the power observable on an O(1) scale.
PathSample scale_path(const PathSample& path, double T, double p);

// Quadratic control cost (1/2) * integral of (phi' + gamma phi)^2, with the
// integrand evaluated at cell midpoints:
//   (dt/2) * sum_k ((phi_{k+1}-phi_k)/dt + gamma (phi_k+phi_{k+1})/2)^2.
// No boundary condition is imposed here; callers decide what phi_0 means.
ActionValue path_action(std::span<const double> phi, double dt, double gamma);

// Trapezoid integral of sgn(phi)|phi|^p along phi.
double signed_power_integral(std::span<const double> phi, double dt, double p);

// Trapezoid integral of |phi|^p along phi.
double abs_power_integral(std::span<const double> phi, double dt, double p);

}  // namespace heavytail
