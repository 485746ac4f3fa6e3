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
#include <string>
#include <string_view>
#include <vector>

#include "heavytail/model.hpp"

namespace heavytail {

enum class Experiment { simulate, excursions, tails, instanton, validate, report };

const char* experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);

// Everything a run needs, with defaults sized to finish quickly.  Files use
// a TOML subset: [section] tables, key = value pairs, double-quoted strings,
// numbers, booleans, flat arrays, and # comments.  Unknown keys are errors.
struct RunConfig {
  ModelParams model{1.0, 4.0};
  Experiment experiment = Experiment::simulate;
  std::uint64_t master_seed = 20250825;
  std::string output_dir = "out";

  std::uint64_t n_samples = 20000;
  std::vector<double> horizons = {50.0, 100.0, 200.0};
  std::vector<double> instanton_horizons = {5.0, 10.0, 20.0, 40.0};
  double dt = 0.0;  // <= 0: per-module defaults
  double eps0 = 0.1;
  double threshold_x = 1.0;

  // Hooks for the validate experiment: every acceptance tolerance is
  // multiplied by tolerance_scale, and a nonempty criteria list restricts
  // the run to those indices (1-based).
  double tolerance_scale = 1.0;
  std::vector<int> criteria;

  void validate() const;  // throws config_error with a diagnostic
  std::uint64_t sub_seed(std::string_view purpose) const;
};

RunConfig parse_run_config(const std::string& toml_text);
RunConfig load_run_config(const std::string& path);

// Canonical form: fixed key order, %.17g numbers.  parse(serialize(c))
// reproduces c exactly, so hashing the canonical form hashes the config.
std::string serialize_run_config(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);  // 64-bit FNV-1a

// Shared numeric formatting for artifacts: %.17g (round-trips doubles),
// non-finite values spelled "nan", "inf", "-inf".
std::string format_numeric(double v);

// Deterministic CSV assembly: comma-separated, LF line endings, trailing
// newline, header always present.  Cells are preformatted strings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string to_string() const;
  void write(const std::string& path) const;
  std::size_t n_rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Reader for the tables this library writes (no quoting or embedded
// commas).  Returns header + rows; used by the report experiment.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws config_error
};

CsvData read_csv(const std::string& path);

}  // namespace heavytail
