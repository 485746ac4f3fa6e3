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

namespace heavytail {

// Independent reference for the constrained action minimum: instead of
// descending on the discretized functional, integrate the stationarity ODE
// phi'' = gamma^2 phi - lambda p |phi|^(p-1) with RK4 from phi(0) = 0 and
// bisect on the initial slope until the free-endpoint condition
// phi'(H) + gamma phi(H) = 0 holds, then rescale by homogeneity so the
// power integral is 1.  Shares no code with the descent solver.
struct ShootingResult {
  double action = 0.0;      // value at constraint level 1
  double slope0 = 0.0;      // matched initial slope (for diagnostics)
  double constraint = 0.0;  // power integral before the rescale
  bool bracketed = false;   // endpoint condition sign change was found
};

ShootingResult shoot_minimum_action(double gamma, double p, double H,
                                    double dt = 1e-4);

}  // namespace heavytail
