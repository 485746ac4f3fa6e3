// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

// Release gate: every numbered claim about the solver/estimator stack,
// checked at its pinned tolerance and budget.  One line per criterion is
// printed as it completes so a long run stays observable.

#include <iostream>

#include <doctest.h>

#include "heavytail/validation.hpp"

using namespace heavytail;

TEST_CASE("acceptance criteria") {
  ValidationOptions opts;
  opts.progress = &std::cout;
  const std::vector<CriterionResult> results = run_acceptance_suite(opts);
  REQUIRE(results.size() == 11);
  for (const CriterionResult& r : results) {
    CHECK_MESSAGE(r.passed, criterion_line(r));
  }
}
