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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace heavytail {

// One acceptance criterion's outcome.  `detail` holds the measured values
// against their tolerances so a failure is diagnosable from the line alone.
struct CriterionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct ValidationOptions {
  std::uint64_t master_seed = 20250825;
  // Multiplies every pass tolerance; < 1 tightens.  Exists so a negative
  // test can corrupt the tolerances and observe the suite fail.
  double tolerance_scale = 1.0;
  // 1-based criterion indices to run; empty runs all eleven.
  std::vector<int> criteria;
  // When set, receives one formatted line per criterion as it finishes.
  std::ostream* progress = nullptr;
};

// Runs the acceptance criteria in index order.  Each criterion is
// self-contained: it derives its own sub-seeds from master_seed, so the
// suite is deterministic and criteria can be run in any subset.
std::vector<CriterionResult> run_acceptance_suite(
    const ValidationOptions& opts = {});

bool all_passed(std::span<const CriterionResult> results);

// The formatted single line used for progress and summaries.
std::string criterion_line(const CriterionResult& r);

}  // namespace heavytail
