// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/shooting.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

namespace heavytail {
namespace {

struct State {
  double phi = 0.0;
  double v = 0.0;
};

// phi'' = gamma^2 phi - lambda p |phi|^(p-1); lambda = gamma^2/p puts the
// turning point at an O(1) amplitude.  The multiplier choice is irrelevant
// after the homogeneity rescale.
struct Ode {
  double gamma2 = 0.0;
  double lambda_p = 0.0;  // lambda * p
  double pm1 = 0.0;

  double accel(double phi) const {
    return gamma2 * phi - lambda_p * std::pow(std::fabs(phi), pm1);
  }
};

State rk4_step(const Ode& ode, const State& s, double h) {
  const double k1p = s.v, k1v = ode.accel(s.phi);
  const double k2p = s.v + 0.5 * h * k1v,
               k2v = ode.accel(s.phi + 0.5 * h * k1p);
  const double k3p = s.v + 0.5 * h * k2v,
               k3v = ode.accel(s.phi + 0.5 * h * k2p);
  const double k4p = s.v + h * k3v, k4v = ode.accel(s.phi + h * k3p);
  return State{s.phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
               s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

// Free-endpoint condition phi'(H) + gamma phi(H); a diverging trajectory
// (odd p dives to -inf once negative) is reported as a large negative value
// so the bisection bracket stays well defined.
double endpoint_condition(const Ode& ode, double gamma, double v0, double H,
                          std::size_t n_steps) {
  const double h = H / double(n_steps);
  State s{0.0, v0};
  for (std::size_t k = 0; k < n_steps; ++k) {
    s = rk4_step(ode, s, h);
    if (!(std::fabs(s.phi) < 1e8) || !(std::fabs(s.v) < 1e8))
      return s.phi < 0.0 ? -1e30 : 1e30;
  }
  return s.v + gamma * s.phi;
}

}  // namespace

ShootingResult shoot_minimum_action(double gamma, double p, double H,
                                    double dt) {
  ShootingResult out;
  if (!(gamma > 0.0) || !(p > 2.0) || !(H > 0.0) || !(dt > 0.0)) {
    std::abort();  // test oracle; contract violations are test bugs
  }
  std::size_t n_steps = std::size_t(std::llround(H / dt));
  if (n_steps % 2 == 1) ++n_steps;  // composite Simpson wants an even count
  const double h = H / double(n_steps);

  Ode ode{gamma * gamma, gamma * gamma, p - 1.0};

  // Small slopes stay in the linear regime (rising, condition positive);
  // grow geometrically until the bump completes early enough to flip the
  // sign.  The growth factor is small so the first sign change brackets
  // the single-bump branch, not a later multi-bump one.
  double lo = 2.0 * gamma * 1e-3 * std::exp(-gamma * H);
  while (!(endpoint_condition(ode, gamma, lo, H, n_steps) > 0.0) &&
         lo > 1e-250)
    lo *= 1e-3;
  double hi = lo;
  for (int i = 0; i < 400; ++i) {
    hi *= 1.25;
    if (endpoint_condition(ode, gamma, hi, H, n_steps) < 0.0) {
      out.bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!out.bracketed) return out;

  for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (endpoint_condition(ode, gamma, mid, H, n_steps) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  out.slope0 = 0.5 * (lo + hi);

  // Integrate once more collecting Simpson samples of the control cost and
  // the power integral, then rescale to constraint level 1.
  std::vector<double> cost(n_steps + 1), pow_int(n_steps + 1);
  State s{0.0, out.slope0};
  auto record = [&](std::size_t k, const State& st) {
    const double u = st.v + gamma * st.phi;
    cost[k] = 0.5 * u * u;
    pow_int[k] = std::copysign(std::pow(std::fabs(st.phi), p), st.phi);
  };
  record(0, s);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    s = rk4_step(ode, s, h);
    record(k, s);
  }
  auto simpson = [&](const std::vector<double>& y) {
    double acc = y.front() + y.back();
    for (std::size_t k = 1; k < n_steps; ++k)
      acc += (k % 2 == 1 ? 4.0 : 2.0) * y[k];
    return acc * h / 3.0;
  };
  const double action_raw = simpson(cost);
  out.constraint = simpson(pow_int);
  out.action = action_raw / std::pow(out.constraint, 2.0 / p);
  return out;
}

}  // namespace heavytail
