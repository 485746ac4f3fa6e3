// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/ou.hpp"

#include <cmath>

#include "heavytail/rng.hpp"

namespace heavytail {

OUTransition ou_transition(double x, double dt, double gamma) {
  require_finite(x, "x");
  require_finite(gamma, "gamma");
  require(gamma > 0.0, "gamma must be positive");
  require(!std::isnan(dt) && dt >= 0.0, "dt must be >= 0");
  // dt = +inf is allowed and yields the stationary law N(0, 1/(2 gamma)).
  const double decay = std::exp(-gamma * dt);
  const double variance = -std::expm1(-2.0 * gamma * dt) / (2.0 * gamma);
  return OUTransition{x * decay, variance};
}

ExactStep exact_step(double gamma, double dt, double noise_scale) {
  require(gamma > 0.0, "gamma must be positive");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive and finite");
  require(noise_scale >= 0.0, "noise_scale must be >= 0");
  const double decay = std::exp(-gamma * dt);
  const double s =
      std::sqrt(-std::expm1(-2.0 * gamma * dt) / (2.0 * gamma));
  return ExactStep{decay, noise_scale * s};
}

PathSample sample_path(const ModelParams& params, const TimeGrid& grid,
                       double x0, std::uint64_t seed,
                       std::uint64_t replicate_id, StepScheme scheme,
                       double noise_scale) {
  params.validate();
  grid.validate();
  require_finite(x0, "x0");
  require_finite(noise_scale, "noise_scale");
  require(noise_scale >= 0.0, "noise_scale must be >= 0");

  PathSample out;
  out.grid = grid;
  out.seed = seed;
  out.replicate_id = replicate_id;
  out.values.resize(grid.n_points());
  out.values[0] = x0;

  rng::GaussianStream zs(seed, replicate_id);
  double x = x0;
  if (scheme == StepScheme::exact) {
    const double a = std::exp(-params.gamma * grid.dt);
    const double s = noise_scale * std::sqrt(-std::expm1(-2.0 * params.gamma *
                                                         grid.dt) /
                                             (2.0 * params.gamma));
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      x = a * x + s * zs.next();
      out.values[k + 1] = x;
    }
  } else {
    const double drift = 1.0 - params.gamma * grid.dt;
    const double s = noise_scale * std::sqrt(grid.dt);
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      x = drift * x + s * zs.next();
      out.values[k + 1] = x;
    }
  }
  return out;
}

double signed_power(double x, double p) {
  require_finite(x, "x");
  require_finite(p, "p");
  require(p > 0.0, "p must be positive");
  return SignedPower(p)(x);
}

SignedPower::SignedPower(double p) : p_(p) {
  if (p == 3.0) {
    kind_ = Kind::cube;
  } else if (p == 4.0) {
    kind_ = Kind::quartic;
  } else {
    kind_ = Kind::general;
  }
}

double time_average(const PathSample& path, double p) {
  path.validate();
  require_finite(p, "p");
  require(p > 0.0, "p must be positive");
  const SignedPower f(p);
  const std::size_t n = path.grid.n_steps;
  double acc = 0.0;
  double g_prev = f(path.values[0]);
  for (std::size_t k = 1; k <= n; ++k) {
    const double g = f(path.values[k]);
    acc += g_prev + g;
    g_prev = g;
  }
  return acc * (0.5 * path.grid.dt) / path.grid.span();
}

PathSample scale_path(const PathSample& path, double T, double p) {
  path.validate();
  require_finite(T, "T");
  require_finite(p, "p");
  require(T > 0.0, "T must be positive");
  require(p > 0.0, "p must be positive");
  PathSample out = path;
  const double factor = std::pow(T, -1.0 / p);
  for (double& v : out.values) v *= factor;
  return out;
}

ActionValue path_action(std::span<const double> phi, double dt, double gamma) {
  require(phi.size() >= 2, "path needs at least two points");
  require_finite(dt, "dt");
  require_finite(gamma, "gamma");
  require(dt > 0.0, "dt must be positive");
  require(gamma > 0.0, "gamma must be positive");
  for (const double v : phi) require_finite(v, "phi");

  const double inv_dt = 1.0 / dt;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < phi.size(); ++k) {
    const double q = (phi[k + 1] - phi[k]) * inv_dt +
                     gamma * 0.5 * (phi[k] + phi[k + 1]);
    acc += q * q;
  }
  return ActionValue{0.5 * dt * acc, dt, phi.size() - 1};
}

namespace {

double trapezoid_power(std::span<const double> phi, double dt, double p,
                       bool take_abs) {
  require(phi.size() >= 2, "path needs at least two points");
  require_finite(dt, "dt");
  require_finite(p, "p");
  require(dt > 0.0, "dt must be positive");
  require(p > 0.0, "p must be positive");
  for (const double v : phi) require_finite(v, "phi");

  const SignedPower f(p);
  auto eval = [&](double x) {
    const double g = f(x);
    return take_abs ? std::fabs(g) : g;
  };
  double acc = 0.5 * (eval(phi.front()) + eval(phi.back()));
  for (std::size_t k = 1; k + 1 < phi.size(); ++k) acc += eval(phi[k]);
  return acc * dt;
}

}  // namespace

double signed_power_integral(std::span<const double> phi, double dt, double p) {
  return trapezoid_power(phi, dt, p, /*take_abs=*/false);
}

double abs_power_integral(std::span<const double> phi, double dt, double p) {
  return trapezoid_power(phi, dt, p, /*take_abs=*/true);
}

}  // namespace heavytail
