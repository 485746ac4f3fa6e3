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

#include <cstddef>
#include <span>
#include <vector>

#include "heavytail/model.hpp"
#include "heavytail/stats.hpp"

namespace heavytail {

// Which power-integral constraint the minimization enforces: the signed
// integral of sgn(phi)|phi|^p or the absolute integral of |phi|^p.
enum class ConstraintKind { signed_power, absolute_power };

// `ratio` minimizes action/constraint^(2/p), which is scale invariant and
// needs no multiplier, but requires a zero start value so that rescaling
// preserves the boundary condition.  `augmented_lagrangian` handles any
// fixed start value and doubles as an independent cross-check.
enum class SolveMethod { automatic, ratio, augmented_lagrangian };

struct SolveOptions {
  ConstraintKind constraint = ConstraintKind::absolute_power;
  SolveMethod method = SolveMethod::automatic;
  std::size_t max_iterations = 3000;   // inner minimizer, per start
  double gradient_tolerance = 1e-8;    // relative to the problem scale
  std::size_t n_random_starts = 8;     // deterministic perturbed bumps
  std::vector<double> warm_start;      // optional path of n_grid+1 values
};

// Minimizer of the discrete control cost (see path_action) over paths on
// [0, H] with phi[0] fixed, subject to the power integral reaching `level`.
// The multiplier satisfies grad(action) = multiplier * grad(constraint);
// el_residual is the sup norm of the central-difference stationarity
// equation phi'' = gamma^2 phi - multiplier * d/dphi f_p(phi) over interior
// nodes, divided by the sup of the equation's own terms (so it is grid- and
// scale-comparable).
struct InstantonSolution {
  double horizon_H = 0.0;
  TimeGrid grid;
  std::vector<double> phi;         // n_grid + 1 values, phi[0] fixed
  double action = 0.0;
  double constraint_signed = 0.0;  // trapezoid integral of sgn(phi)|phi|^p
  double constraint_abs = 0.0;     // trapezoid integral of |phi|^p
  double multiplier = 0.0;
  double el_residual = 0.0;
  bool converged = false;
  std::size_t n_iterations = 0;    // iterations spent on the winning start
  double boundary_value = 0.0;
  double level = 1.0;
};

// Solves the finite-horizon problem with multi-start quasi-Newton descent.
// The ratio form makes the level-c solution an exact rescaling of the
// level-1 solution: action scales as c^(2/p).  Throws invalid_input for
// H <= 0, n_grid < 100, or level <= 0; a solve that stalls before the
// gradient tolerance returns its best iterate with converged = false.
InstantonSolution solve_finite_horizon(const ModelParams& params, double H,
                                       std::size_t n_grid,
                                       double boundary_x0 = 0.0,
                                       double level = 1.0,
                                       const SolveOptions& opts = {});

// Solves the same horizon under the signed and the absolute constraint;
// for the zero start value the two optimal values coincide (the absolute
// minimizer is nonnegative, where the two integrands agree).
struct ConstraintEquivalence {
  InstantonSolution signed_solution;
  InstantonSolution absolute_solution;
  double gap = 0.0;  // |J_signed - J_abs|
  bool converged = false;
};

ConstraintEquivalence constraint_equivalence_check(const ModelParams& params,
                                                   double H,
                                                   std::size_t n_grid);

struct HorizonValue {
  double H = 0.0;
  double J = 0.0;
};

// Finite-horizon values with their infinite-horizon extrapolation
// J_H = J_inf + b exp(-beta H).
struct RatePrefactor {
  double J_inf = 0.0;
  std::vector<HorizonValue> per_horizon;
  ExpDecayFit model;
  double tolerance_achieved = 0.0;  // |J at largest H - J_inf|
};

// Fit + diagnostics on already-computed per-horizon values: requires >= 4
// horizons, strictly increasing H, and values non-increasing within
// `tolerance` (violations signal solver failure and throw).
RatePrefactor extrapolate_from_values(std::span<const HorizonValue> values,
                                      double tolerance = 1e-8);

// Solves every horizon at step dt and dt/2 (dt <= 0 picks 0.0025/gamma),
// requires the two to agree within 1e-4 relative, keeps the finer value,
// and extrapolates H -> infinity.
RatePrefactor extrapolate_Jinf(const ModelParams& params,
                               std::span<const double> H_list, double dt = 0.0,
                               const SolveOptions& opts = {});

// I(x) = J_inf * |x|^(2/p); only defined in the heavy-tailed regime p > 2.
double rate_function(double x, const RatePrefactor& prefactor,
                     const ModelParams& params);

// Relative gap between J_inf at gamma2 and the value predicted from gamma1
// by the scaling J_inf(gamma) = gamma^(1+2/p) * J_inf(1).  Both limits use
// the default horizon ladder {5,10,20,40}/gamma.
double gamma_scaling_check(double p, double gamma1, double gamma2,
                           double dt = 0.0);

// Cost of the unit-time linear ramp from 0 to eps0, by direct quadrature of
// (1/2) * (d/dt(eps0 t) + gamma eps0 t)^2.
double connector_cost(double eps0, double gamma);

// Extrapolated values of the problem started at eps0 and at 0; prepending
// the ramp to an eps0-start path bounds the zero-start value from above:
// J_zero <= connector + J_eps0 + tol.
struct ShiftedStartComparison {
  double J_eps0 = 0.0;
  double J_zero = 0.0;
  double connector = 0.0;
  double gap = 0.0;  // |J_eps0 - J_zero|
  bool bound_holds = false;
};

ShiftedStartComparison shifted_start_comparison(const ModelParams& params,
                                                double eps0,
                                                std::span<const double> H_list,
                                                double dt = 0.0);

}  // namespace heavytail
