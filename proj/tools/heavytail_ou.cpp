// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "heavytail/errors.hpp"
#include "heavytail/harness.hpp"
#include "heavytail/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Tail statistics of time-averaged signed powers of a mean-reverting "
      "diffusion: simulation, cycle decomposition, rare-event estimates and "
      "the variational rate prediction."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("--config", config_path, "TOML run configuration file")
      ->check(CLI::ExistingFile);
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "override the master seed");
  app.add_option("--out", out_dir, "override the output directory");

  app.add_subcommand("simulate", "sample paths, write their time averages");
  app.add_subcommand("excursions", "per-path cycle decomposition summaries");
  app.add_subcommand("tails", "naive tail estimates across horizons");
  app.add_subcommand("instanton",
                     "per-horizon minimal actions and the extrapolated limit");
  app.add_subcommand("validate", "run the acceptance suite");
  app.add_subcommand("report",
                     "join tail estimates with the variational prediction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a configuration error
  }

  try {
    heavytail::RunConfig config;
    if (!config_path.empty()) config = heavytail::load_run_config(config_path);
    config.experiment = heavytail::experiment_from_name(
        app.get_subcommands().front()->get_name());
    if (seed_opt->count() > 0) config.master_seed = seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    return heavytail::run(config, std::cout);
  } catch (const heavytail::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
