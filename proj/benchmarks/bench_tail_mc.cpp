// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

// Times the OpenMP Monte Carlo kernels against their serial reference
// loops and checks that both produce bit-identical estimates.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>

#include <CLI11.hpp>

#include "heavytail/excursion.hpp"
#include "heavytail/mc.hpp"
#include "heavytail/parallel.hpp"

#ifdef HEAVYTAIL_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

double time_of(const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void print_row(const char* kernel, std::uint64_t n, double serial_s,
               double openmp_s, bool identical) {
  std::printf("%-18s %10llu %12.3f %12.3f %9.2fx %10s\n", kernel,
              static_cast<unsigned long long>(n), serial_s, openmp_s,
              serial_s / openmp_s, identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP timing of the Monte Carlo kernels"};
  std::uint64_t n = 200000;
  double T = 50.0;
  std::uint64_t seed = 1;
  app.add_option("--n", n, "replicates per kernel");
  app.add_option("--T", T, "time horizon");
  app.add_option("--seed", seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  const heavytail::ModelParams params{1.0, 4.0};

#ifdef HEAVYTAIL_HAVE_OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-18s %10s %12s %12s %9s %10s\n", "kernel", "n", "serial[s]",
              "openmp[s]", "speedup", "identical");

  {
    heavytail::McOptions serial_opts, openmp_opts;
    serial_opts.mode = heavytail::Execution::serial;
    openmp_opts.mode = heavytail::Execution::openmp;
    heavytail::TailEstimate a, b;
    const double ts = time_of(
        [&] { a = estimate_tail(params, 0.5, T, n, seed, serial_opts); });
    const double tp = time_of(
        [&] { b = estimate_tail(params, 0.5, T, n, seed, openmp_opts); });
    print_row("tail estimate", n, ts, tp,
              a.p_hat == b.p_hat && a.n_hits == b.n_hits);
  }

  {
    const std::uint64_t reps = n / 10 + 1;
    heavytail::CycleDeviation a, b;
    // warm the cached mean-duration estimate so both timings measure the
    // kernel itself
    cycle_count_deviation(params, 0.1, 0.5, T, 1, seed,
                          heavytail::Execution::serial);
    const double ts = time_of([&] {
      a = cycle_count_deviation(params, 0.1, 0.5, T, reps, seed,
                                heavytail::Execution::serial);
    });
    const double tp = time_of([&] {
      b = cycle_count_deviation(params, 0.1, 0.5, T, reps, seed,
                                heavytail::Execution::openmp);
    });
    print_row("cycle deviation", reps, ts, tp,
              a.p_hat == b.p_hat && a.n_outside == b.n_outside);
  }

  return 0;
}
