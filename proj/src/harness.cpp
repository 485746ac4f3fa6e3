// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <utility>

#include "json.hpp"

#include "heavytail/errors.hpp"
#include "heavytail/excursion.hpp"
#include "heavytail/instanton.hpp"
#include "heavytail/mc.hpp"
#include "heavytail/ou.hpp"
#include "heavytail/validation.hpp"

namespace heavytail {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Accumulates one CSV row; non-finite numerics become the literal "nan"
// and raise a status flag, per the output contract.
struct Row {
  std::vector<std::string> cells;
  std::string flags;

  void add_num(double v) {
    if (std::isfinite(v)) {
      cells.push_back(format_numeric(v));
    } else {
      cells.emplace_back("nan");
      flag("nan");
    }
  }
  void add_int(std::uint64_t v) { cells.push_back(std::to_string(v)); }
  void add_raw(std::string s) { cells.push_back(std::move(s)); }
  void flag(const std::string& f) {
    if (flags == f || flags.find(f + ";") != std::string::npos ||
        flags.find(";" + f) != std::string::npos)
      return;
    if (!flags.empty()) flags += ';';
    flags += f;
  }
  std::vector<std::string> finish() {
    cells.push_back(flags.empty() ? "ok" : flags);
    return std::move(cells);
  }
};

double pick_dt(const RunConfig& config) {
  return config.dt > 0.0 ? config.dt : 0.01 / config.model.gamma;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void note(std::ostream& log, const std::string& path, std::size_t rows) {
  log << "wrote " << path << " (" << rows << " rows)\n";
}

void run_simulate(const RunConfig& config, std::ostream& log,
                  std::vector<std::string>& outputs) {
  const double dt = pick_dt(config);
  CsvTable table({"T", "replicate", "time_average", "status"});
  for (const double T : config.horizons) {
    const TimeGrid grid{0.0, dt, static_cast<std::size_t>(std::llround(T / dt))};
    const std::uint64_t seed =
        config.sub_seed("simulate-T" + format_numeric(T));
    for (std::uint64_t rep = 0; rep < config.n_samples; ++rep) {
      Row row;
      row.add_num(T);
      row.add_int(rep);
      row.add_num(
          time_average(sample_path(config.model, grid, 0.0, seed, rep),
                       config.model.p));
      table.add_row(row.finish());
    }
  }
  const std::string path = join_path(config.output_dir, "simulate.csv");
  table.write(path);
  outputs.emplace_back("simulate.csv");
  note(log, path, table.n_rows());
}

void run_excursions(const RunConfig& config, std::ostream& log,
                    std::vector<std::string>& outputs) {
  const double dt = pick_dt(config);
  CsvTable table({"T", "replicate", "n_cycles", "mean_duration",
                  "remainder_integral", "decomposition_error", "status"});
  for (const double T : config.horizons) {
    const TimeGrid grid{0.0, dt, static_cast<std::size_t>(std::llround(T / dt))};
    const std::uint64_t seed =
        config.sub_seed("excursions-T" + format_numeric(T));
    for (std::uint64_t rep = 0; rep < config.n_samples; ++rep) {
      const PathSample path = sample_path(config.model, grid, 0.0, seed, rep);
      const ExcursionResult exc =
          detect_excursions(path, config.eps0, config.model.p);
      const double total = grid.span() * time_average(path, config.model.p);
      double sum = exc.stats.remainder_integral;
      for (const double c : exc.stats.cycle_integrals) sum += c;
      Row row;
      row.add_num(T);
      row.add_int(rep);
      row.add_int(exc.stats.n_cycles);
      row.add_num(exc.stats.mean_duration);
      row.add_num(exc.stats.remainder_integral);
      row.add_num(std::fabs(total - sum) / std::max(1.0, std::fabs(total)));
      if (exc.stats.n_cycles == 0) row.flag("no_cycles");
      table.add_row(row.finish());
    }
  }
  const std::string path = join_path(config.output_dir, "excursions.csv");
  table.write(path);
  outputs.emplace_back("excursions.csv");
  note(log, path, table.n_rows());
}

void run_tails(const RunConfig& config, std::ostream& log,
               std::vector<std::string>& outputs) {
  McOptions mco;
  mco.dt = config.dt;
  CsvTable table({"T", "x", "n_samples", "n_hits", "p_hat", "ci_low",
                  "ci_high", "scaled_rate", "scaled_rate_se", "bound_only",
                  "status"});
  for (const double T : config.horizons) {
    Row row;
    row.add_num(T);
    row.add_num(config.threshold_x);
    try {
      const TailEstimate est = estimate_tail(
          config.model, config.threshold_x, T, config.n_samples,
          config.sub_seed("tails-T" + format_numeric(T)), mco);
      row.add_int(est.n_samples);
      row.add_int(est.n_hits);
      row.add_num(est.p_hat);
      row.add_num(est.ci.lo);
      row.add_num(est.ci.hi);
      row.add_num(est.scaled_rate);
      row.add_num(est.scaled_rate_se);
      row.add_raw(est.bound_only ? "true" : "false");
      if (est.bound_only) row.flag("bound_only");
    } catch (const std::exception& e) {
      while (row.cells.size() < 10) row.add_raw("nan");
      row.flag("error");
      log << "tails row T=" << format_numeric(T) << " failed: " << e.what()
          << "\n";
    }
    table.add_row(row.finish());
  }
  const std::string path = join_path(config.output_dir, "tails.csv");
  table.write(path);
  outputs.emplace_back("tails.csv");
  note(log, path, table.n_rows());
}

void run_instanton(const RunConfig& config, std::ostream& log,
                   std::vector<std::string>& outputs) {
  const RatePrefactor pf =
      extrapolate_Jinf(config.model, config.instanton_horizons, config.dt);
  CsvTable table({"H", "J", "status"});
  for (const HorizonValue& hv : pf.per_horizon) {
    Row row;
    row.add_num(hv.H);
    row.add_num(hv.J);
    table.add_row(row.finish());
  }
  const std::string csv_path = join_path(config.output_dir, "instanton.csv");
  table.write(csv_path);
  outputs.emplace_back("instanton.csv");
  note(log, csv_path, table.n_rows());

  json j;
  j["gamma"] = config.model.gamma;
  j["p"] = config.model.p;
  j["J_inf"] = pf.J_inf;
  j["tolerance_achieved"] = pf.tolerance_achieved;
  j["per_horizon"] = json::array();
  for (const HorizonValue& hv : pf.per_horizon)
    j["per_horizon"].push_back({{"H", hv.H}, {"J", hv.J}});
  j["model"] = {{"a", pf.model.a},
                {"b", pf.model.b},
                {"beta", pf.model.beta},
                {"rms", pf.model.rms}};
  const std::string json_path = join_path(config.output_dir, "jinf.json");
  std::ofstream out(json_path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw config_error("cannot write " + json_path);
  outputs.emplace_back("jinf.json");
  log << "wrote " << json_path << " (J_inf=" << format_numeric(pf.J_inf)
      << ")\n";
}

int run_validate(const RunConfig& config, std::ostream& log,
                 std::vector<std::string>& outputs) {
  ValidationOptions opts;
  opts.master_seed = config.master_seed;
  opts.tolerance_scale = config.tolerance_scale;
  opts.criteria = config.criteria;
  opts.progress = &log;
  const std::vector<CriterionResult> results = run_acceptance_suite(opts);

  CsvTable table({"criterion", "name", "passed", "detail", "status"});
  std::size_t n_pass = 0;
  for (const CriterionResult& r : results) {
    n_pass += r.passed;
    // detail strings are prose; keep cells comma-free for the plain reader
    std::string detail = r.detail;
    for (char& c : detail)
      if (c == ',') c = ';';
    table.add_row({std::to_string(r.index), r.name,
                   r.passed ? "true" : "false", detail,
                   r.passed ? "ok" : "fail"});
  }
  const std::string path = join_path(config.output_dir, "validate.csv");
  table.write(path);
  outputs.emplace_back("validate.csv");
  note(log, path, table.n_rows());
  log << n_pass << "/" << results.size() << " criteria passed\n";
  return all_passed(results) ? 0 : 1;
}

double cell_double(const std::vector<std::string>& row, std::size_t col) {
  const std::string& s = row.at(col);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw config_error("non-numeric cell '" + s + "'");
  return v;
}

void run_report(const RunConfig& config, std::ostream& log,
                std::vector<std::string>& outputs) {
  const std::vector<ReportRow> rows =
      build_report(config.output_dir, config.model);
  CsvTable table({"x", "T", "mc_scaled_rate", "theory_rate", "gap_relative",
                  "status"});
  for (const ReportRow& r : rows) {
    Row row;
    row.add_num(r.x);
    row.add_num(r.T);
    row.add_num(r.mc_scaled_rate);
    row.add_num(r.theory_rate);
    row.add_num(r.gap_relative);
    if (r.status != "ok") row.flag(r.status);
    table.add_row(row.finish());
  }
  const std::string path = join_path(config.output_dir, "report.csv");
  table.write(path);
  outputs.emplace_back("report.csv");
  note(log, path, table.n_rows());
}

void write_manifest(const RunConfig& config, double wall_seconds,
                    const std::vector<std::string>& outputs) {
  json m;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  m["config_hash"] = hash_hex;
  m["experiment"] = experiment_name(config.experiment);
  m["master_seed"] = config.master_seed;
  m["config"] = serialize_run_config(config);
  m["versions"] = {{"library", "0.1.0"}, {"compiler", __VERSION__}};
  m["wall_time_seconds"] = wall_seconds;
  m["outputs"] = outputs;
  const std::string path = join_path(config.output_dir, "manifest.json");
  std::ofstream out(path, std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw config_error("cannot write " + path);
}

}  // namespace

std::vector<ReportRow> build_report(const std::string& dir,
                                    const ModelParams& params) {
  const std::string tails_path = join_path(dir, "tails.csv");
  const std::string jinf_path = join_path(dir, "jinf.json");
  if (!fs::exists(tails_path) || !fs::exists(jinf_path))
    throw config_error("report needs tails.csv and jinf.json under '" + dir +
                       "'; run the tails and instanton experiments first");

  std::ifstream in(jinf_path, std::ios::binary);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(jinf_path + ": " + e.what());
  }
  const double J_inf = j.at("J_inf").get<double>();
  if (j.at("gamma").get<double>() != params.gamma ||
      j.at("p").get<double>() != params.p)
    throw config_error(
        "jinf.json was produced with different model parameters");

  const CsvData tails = read_csv(tails_path);
  const std::size_t c_T = tails.column("T");
  const std::size_t c_x = tails.column("x");
  const std::size_t c_rate = tails.column("scaled_rate");
  const std::size_t c_bound = tails.column("bound_only");
  const std::size_t c_status = tails.column("status");

  std::vector<ReportRow> out;
  out.reserve(tails.rows.size());
  for (const std::vector<std::string>& row : tails.rows) {
    ReportRow r;
    r.x = cell_double(row, c_x);
    r.T = cell_double(row, c_T);
    r.mc_scaled_rate = cell_double(row, c_rate);
    r.theory_rate = J_inf * std::pow(std::fabs(r.x), 2.0 / params.p);
    const bool bound = row.at(c_bound) == "true";
    const std::string& status = row.at(c_status);
    if (bound || status != "ok" || !std::isfinite(r.mc_scaled_rate) ||
        !(r.theory_rate > 0.0)) {
      r.gap_relative = std::numeric_limits<double>::quiet_NaN();
      r.status = status != "ok" ? status : "bound_only";
    } else {
      r.gap_relative =
          std::fabs(r.mc_scaled_rate - r.theory_rate) / r.theory_rate;
    }
    out.push_back(std::move(r));
  }
  return out;
}

int run(const RunConfig& config, std::ostream& log) {
  config.validate();
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec)
    throw config_error("cannot create output directory '" +
                       config.output_dir + "': " + ec.message());

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  int code = 0;
  switch (config.experiment) {
    case Experiment::simulate:
      run_simulate(config, log, outputs);
      break;
    case Experiment::excursions:
      run_excursions(config, log, outputs);
      break;
    case Experiment::tails:
      run_tails(config, log, outputs);
      break;
    case Experiment::instanton:
      run_instanton(config, log, outputs);
      break;
    case Experiment::validate:
      code = run_validate(config, log, outputs);
      break;
    case Experiment::report:
      run_report(config, log, outputs);
      break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(config, wall, outputs);
  return code;
}

}  // namespace heavytail
