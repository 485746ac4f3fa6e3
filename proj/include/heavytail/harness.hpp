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

#include <iosfwd>
#include <string>
#include <vector>

#include "heavytail/io.hpp"

namespace heavytail {

// One row of the final theory-vs-simulation table: a Monte Carlo scaled
// rate next to I(x) recomputed from the extrapolated prefactor on disk.
struct ReportRow {
  double x = 0.0;
  double T = 0.0;
  double mc_scaled_rate = 0.0;
  double theory_rate = 0.0;
  double gap_relative = 0.0;
  std::string status = "ok";
};

// Joins tails.csv with jinf.json from `dir`.  Throws config_error when
// either artifact is missing or was produced with different model
// parameters than `params`.
std::vector<ReportRow> build_report(const std::string& dir,
                                    const ModelParams& params);

// Runs the configured experiment and writes its CSV tables plus a
// manifest.json under config.output_dir; `log` receives progress lines.
// Returns the process exit code: 0 on success, 1 when the validate
// experiment reports failed criteria.  Configuration problems (including
// missing report inputs) throw config_error, which the CLI maps to 2.
// For a fixed config the CSV artifacts are byte-identical across reruns;
// only the manifest's wall time may differ.
int run(const RunConfig& config, std::ostream& log);

}  // namespace heavytail
