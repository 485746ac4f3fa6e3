// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include "json.hpp"

#include "heavytail/errors.hpp"
#include "heavytail/harness.hpp"
#include "heavytail/io.hpp"

using namespace heavytail;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

double cell(const CsvData& d, std::size_t row, const std::string& col) {
  return std::strtod(d.rows.at(row).at(d.column(col)).c_str(), nullptr);
}

}  // namespace

TEST_CASE("simulate writes per-replicate averages, byte-identical on rerun") {
  RunConfig c;
  c.experiment = Experiment::simulate;
  c.output_dir = fresh_dir("ht_harness_simulate");
  c.n_samples = 50;
  c.horizons = {2.0};
  c.dt = 0.02;
  std::ostringstream log;
  CHECK(run(c, log) == 0);

  const std::string csv_path = c.output_dir + "/simulate.csv";
  const CsvData d = read_csv(csv_path);
  CHECK(d.header == std::vector<std::string>{"T", "replicate", "time_average",
                                             "status"});
  REQUIRE(d.rows.size() == 50);
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    CHECK(std::isfinite(cell(d, i, "time_average")));
    CHECK(d.rows[i].back() == "ok");
  }
  CHECK(fs::exists(c.output_dir + "/manifest.json"));

  const std::string first = slurp(csv_path);
  CHECK(run(c, log) == 0);
  CHECK(slurp(csv_path) == first);
}

TEST_CASE("excursions rows carry exact decompositions") {
  RunConfig c;
  c.experiment = Experiment::excursions;
  c.output_dir = fresh_dir("ht_harness_excursions");
  c.n_samples = 20;
  c.horizons = {20.0};
  c.dt = 0.01;
  std::ostringstream log;
  CHECK(run(c, log) == 0);

  const CsvData d = read_csv(c.output_dir + "/excursions.csv");
  REQUIRE(d.rows.size() == 20);
  std::size_t with_cycles = 0;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    CHECK(cell(d, i, "decomposition_error") <= 1e-10);
    with_cycles += cell(d, i, "n_cycles") > 0;
  }
  // gamma=1, eps0=0.1: a horizon of 20 completes many cycles
  CHECK(with_cycles == 20);
}

TEST_CASE("tails, instanton and report form a consistent pipeline") {
  RunConfig c;
  c.output_dir = fresh_dir("ht_harness_pipeline");
  c.n_samples = 2000;
  c.horizons = {5.0, 10.0};
  c.instanton_horizons = {2.5, 5.0, 7.5, 10.0};
  c.dt = 0.02;
  c.threshold_x = 0.4;
  std::ostringstream log;

  c.experiment = Experiment::tails;
  CHECK(run(c, log) == 0);
  const std::string tails_path = c.output_dir + "/tails.csv";
  const CsvData tails = read_csv(tails_path);
  REQUIRE(tails.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const double p_hat = cell(tails, i, "p_hat");
    CHECK(p_hat > 0.0);
    CHECK(p_hat < 1.0);
    CHECK(tails.rows[i].back() == "ok");
  }
  const std::string tails_bytes = slurp(tails_path);
  CHECK(run(c, log) == 0);  // rerun determinism
  CHECK(slurp(tails_path) == tails_bytes);

  c.experiment = Experiment::instanton;
  CHECK(run(c, log) == 0);
  const CsvData inst = read_csv(c.output_dir + "/instanton.csv");
  CHECK(inst.rows.size() == 4);
  nlohmann::json jinf;
  {
    std::ifstream in(c.output_dir + "/jinf.json");
    in >> jinf;
  }
  const double J_inf = jinf.at("J_inf").get<double>();
  // the infinite-horizon prefactor for gamma=1, p=4 is 2/sqrt(3)
  CHECK(std::fabs(J_inf - 2.0 / std::sqrt(3.0)) < 1e-3);

  c.experiment = Experiment::report;
  CHECK(run(c, log) == 0);
  const CsvData rep = read_csv(c.output_dir + "/report.csv");
  REQUIRE(rep.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const double theory = cell(rep, i, "theory_rate");
    CHECK(theory ==
          doctest::Approx(J_inf * std::sqrt(0.4)).epsilon(1e-12));
    const double want_gap =
        std::fabs(cell(rep, i, "mc_scaled_rate") - theory) / theory;
    CHECK(cell(rep, i, "gap_relative") ==
          doctest::Approx(want_gap).epsilon(1e-12));
    CHECK(rep.rows[i].back() == "ok");
  }

  nlohmann::json manifest;
  {
    std::ifstream in(c.output_dir + "/manifest.json");
    in >> manifest;
  }
  CHECK(manifest.at("experiment") == "report");
  CHECK(manifest.at("outputs") == nlohmann::json::array({"report.csv"}));
  char expect_hash[24];
  std::snprintf(expect_hash, sizeof expect_hash, "%016llx",
                static_cast<unsigned long long>(config_hash(c)));
  CHECK(manifest.at("config_hash") == expect_hash);
  CHECK(parse_run_config(manifest.at("config").get<std::string>())
            .threshold_x == c.threshold_x);
}

TEST_CASE("report join handles bound-only rows and rejects mismatches") {
  const std::string dir = fresh_dir("ht_harness_report_join");
  {
    CsvTable t({"T", "x", "n_samples", "n_hits", "p_hat", "ci_low", "ci_high",
                "scaled_rate", "scaled_rate_se", "bound_only", "status"});
    t.add_row({"50", "0.25", "1000", "12", "0.012", "0.006", "0.02", "0.9",
               "0.05", "false", "ok"});
    t.add_row({"100", "0.25", "1000", "0", "0", "0", "0.004", "0.55", "0",
               "true", "bound_only"});
    t.write(dir + "/tails.csv");
    std::ofstream out(dir + "/jinf.json");
    out << R"({"gamma": 1.0, "p": 4.0, "J_inf": 2.0})";
  }
  const ModelParams params{1.0, 4.0};
  const std::vector<ReportRow> rows = build_report(dir, params);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].theory_rate == doctest::Approx(1.0));  // 2 * 0.25^(1/2)
  CHECK(rows[0].gap_relative == doctest::Approx(0.1));
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status == "bound_only");
  CHECK(std::isnan(rows[1].gap_relative));

  CHECK_THROWS_AS((void)build_report(dir, ModelParams{1.0, 3.0}),
                  config_error);
  CHECK_THROWS_AS((void)build_report(fresh_dir("ht_harness_empty"), params),
                  config_error);
}

TEST_CASE("zero-hit tail rows are flagged bound-only") {
  RunConfig c;
  c.experiment = Experiment::tails;
  c.output_dir = fresh_dir("ht_harness_bound");
  c.n_samples = 200;
  c.horizons = {5.0};
  c.dt = 0.05;
  c.threshold_x = 5.0;  // far beyond anything 200 samples reach
  std::ostringstream log;
  CHECK(run(c, log) == 0);
  const CsvData d = read_csv(c.output_dir + "/tails.csv");
  REQUIRE(d.rows.size() == 1);
  CHECK(d.rows[0][d.column("n_hits")] == "0");
  CHECK(d.rows[0][d.column("bound_only")] == "true");
  // undefined cells are spelled nan and flagged alongside bound_only
  CHECK(d.rows[0].back().find("bound_only") != std::string::npos);
}

TEST_CASE("validate experiment: pass, determinism, corrupted tolerance") {
  RunConfig c;
  c.experiment = Experiment::validate;
  c.output_dir = fresh_dir("ht_harness_validate");
  c.criteria = {2};
  std::ostringstream log;
  CHECK(run(c, log) == 0);
  const std::string path = c.output_dir + "/validate.csv";
  const CsvData d = read_csv(path);
  REQUIRE(d.rows.size() == 1);
  CHECK(d.rows[0][d.column("criterion")] == "2");
  CHECK(d.rows[0][d.column("passed")] == "true");
  CHECK(d.rows[0].back() == "ok");

  const std::string bytes = slurp(path);
  CHECK(run(c, log) == 0);
  CHECK(slurp(path) == bytes);  // validate twice -> identical summaries

  // the negative test: corrupt the tolerances and the suite must fail
  RunConfig bad = c;
  bad.output_dir = fresh_dir("ht_harness_validate_bad");
  bad.tolerance_scale = 1e-16;
  CHECK(run(bad, log) == 1);
  const CsvData db = read_csv(bad.output_dir + "/validate.csv");
  CHECK(db.rows[0][db.column("passed")] == "false");
  CHECK(db.rows[0].back() == "fail");
}

TEST_CASE("run validates the config and creates nested output directories") {
  RunConfig c;
  c.experiment = Experiment::simulate;
  c.output_dir = fresh_dir("ht_harness_nested") + "/a/b";
  c.n_samples = 5;
  c.horizons = {1.0};
  c.dt = 0.05;
  std::ostringstream log;
  CHECK(run(c, log) == 0);
  CHECK(fs::exists(c.output_dir + "/simulate.csv"));

  c.n_samples = 0;
  CHECK_THROWS_AS((void)run(c, log), config_error);
}
