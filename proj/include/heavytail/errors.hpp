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
#include <stdexcept>
#include <string>

namespace heavytail {

// Base for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument values (non-finite inputs, empty ranges, ...).
class invalid_input : public error {
 public:
  using error::error;
};

// Not enough data to produce the requested statistic or fit.
class insufficient_data : public error {
 public:
  using error::error;
};

// Operation is only defined in the p > 2 regime.
class out_of_regime : public error {
 public:
  using error::error;
};

// Malformed or inconsistent run configuration.
class config_error : public error {
 public:
  using error::error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_input(msg);
}

inline void require_finite(double v, const std::string& name) {
  if (!std::isfinite(v)) throw invalid_input(name + " must be finite");
}

}  // namespace heavytail
