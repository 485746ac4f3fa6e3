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

#include "heavytail/errors.hpp"

namespace heavytail {

// Mean-reverting diffusion dX = -gamma X dt + dW observed through the
// signed power |x|^p sgn(x).  Time averages of that observable satisfy a
// large-deviation bound at speed T^(2/p) once p > 2; alpha() is that
// exponent.
struct ModelParams {
  double gamma = 1.0;
  double p = 4.0;

  ModelParams() = default;
  ModelParams(double gamma_, double p_) : gamma(gamma_), p(p_) { validate(); }

  double alpha() const { return 2.0 / p; }
  bool heavy_tailed_regime() const { return p > 2.0; }

  void validate() const {
    require_finite(gamma, "gamma");
    require_finite(p, "p");
    require(gamma > 0.0, "gamma must be positive");
    require(p > 0.0, "p must be positive");
  }
};

// Uniform grid t_k = t_start + k dt, k = 0..n_steps.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 0.01;
  std::size_t n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double t_start_, double dt_, std::size_t n_steps_)
      : t_start(t_start_), dt(dt_), n_steps(n_steps_) {
    validate();
  }

  std::size_t n_points() const { return n_steps + 1; }
  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }
  double t_end() const { return time(n_steps); }
  double span() const { return static_cast<double>(n_steps) * dt; }

  void validate() const {
    require_finite(t_start, "t_start");
    require_finite(dt, "dt");
    require(dt > 0.0, "dt must be positive");
    require(n_steps >= 1, "grid needs at least one step");
  }
};

// One simulated trajectory plus the stream identity that produced it, so
// any sample can be regenerated (or extended) independently of the batch
// it came from.
struct PathSample {
  TimeGrid grid;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t replicate_id = 0;

  void validate() const {
    grid.validate();
    require(values.size() == grid.n_points(),
            "path length must match grid point count");
  }
};

// Value of the quadratic control functional together with the grid it was
// evaluated on.
struct ActionValue {
  double value = 0.0;
  double dt = 0.0;
  std::size_t n_steps = 0;
};

}  // namespace heavytail
