// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "heavytail/detail/excursion_stream.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/rng.hpp"

namespace heavytail {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Update coefficients x' = a x + s z for the chosen scheme; s absorbs the
// noise scale.  Expressions match sample_path so the streamed chain is
// bit-identical to the stored-path API.
struct Coeffs {
  double a = 0.0;
  double s = 0.0;
};

Coeffs coeffs(const ModelParams& params, double dt, StepScheme scheme,
              double noise_scale) {
  if (scheme == StepScheme::exact) {
    const double a = std::exp(-params.gamma * dt);
    const double s = noise_scale * std::sqrt(-std::expm1(-2.0 * params.gamma *
                                                         dt) /
                                             (2.0 * params.gamma));
    return {a, s};
  }
  return {1.0 - params.gamma * dt, noise_scale * std::sqrt(dt)};
}

struct GridSpec {
  double dt = 0.0;
  std::size_t n_steps = 0;
};

GridSpec resolve_grid(const ModelParams& params, double T, double dt_opt) {
  const double dt0 = dt_opt > 0.0 ? dt_opt : 0.01 / params.gamma;
  const long long n = std::max<long long>(1, std::llround(T / dt0));
  return {T / static_cast<double>(n), static_cast<std::size_t>(n)};
}

// Simulate n_samples paths from 0 and count the replicates whose stored
// path satisfies pred.  Chunked and fold-ordered, so the count (and hence
// every downstream statistic) is identical for serial and parallel runs.
template <class Pred>
std::uint64_t count_hits(const Coeffs& c, const GridSpec& g,
                         std::uint64_t n_samples, std::uint64_t seed,
                         Execution mode, Pred&& pred) {
  const auto partial = run_chunked<std::uint64_t>(
      n_samples, kDefaultChunk, mode,
      [&](std::uint64_t begin, std::uint64_t end) {
        PathSample ps;
        ps.grid = TimeGrid{0.0, g.dt, g.n_steps};
        ps.values.assign(g.n_steps + 1, 0.0);
        std::uint64_t hits = 0;
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          rng::GaussianStream zs(seed, rep);
          double x = 0.0;
          for (std::size_t k = 1; k <= g.n_steps; ++k) {
            x = c.a * x + c.s * zs.next();
            ps.values[k] = x;
          }
          if (pred(ps)) ++hits;
        }
        return hits;
      });
  return std::accumulate(partial.begin(), partial.end(), std::uint64_t{0});
}

TailEstimate finish_tail(double x, double T, std::uint64_t n,
                         std::uint64_t hits, double alpha) {
  TailEstimate e;
  e.threshold_x = x;
  e.horizon_T = T;
  e.n_samples = n;
  e.n_hits = hits;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n);
  e.ci = wilson_interval(hits, n);
  const double speed = std::pow(T, alpha);
  if (hits > 0) {
    e.scaled_rate = -std::log(e.p_hat) / speed;
    e.scaled_rate_se =
        std::sqrt(static_cast<double>(n - hits) /
                  (static_cast<double>(n) * static_cast<double>(hits))) /
        speed;
  } else {
    e.bound_only = true;
    e.scaled_rate = -std::log(e.ci.hi) / speed;
    e.scaled_rate_se = kNan;
  }
  return e;
}

}  // namespace

TailEstimate estimate_tail(const ModelParams& params, double x, double T,
                           std::uint64_t n_samples, std::uint64_t seed,
                           const McOptions& opts) {
  params.validate();
  require(!std::isnan(x), "x must not be NaN");
  require(std::isfinite(T) && T > 0.0, "T must be positive and finite");
  require(n_samples >= 1, "need at least one sample");

  const GridSpec g = resolve_grid(params, T, opts.dt);
  const Coeffs c = coeffs(params, g.dt, opts.scheme, 1.0);
  const double p = params.p;
  const std::uint64_t hits =
      count_hits(c, g, n_samples, seed, opts.mode,
                 [&](const PathSample& ps) { return time_average(ps, p) >= x; });
  return finish_tail(x, T, n_samples, hits, params.alpha());
}

TailEstimate estimate_window(const ModelParams& params, double x, double delta,
                             double T, std::uint64_t n_samples,
                             std::uint64_t seed, const McOptions& opts) {
  params.validate();
  require_finite(x, "x");
  require(!std::isnan(delta) && delta > 0.0, "delta must be positive");
  require(std::isfinite(T) && T > 0.0, "T must be positive and finite");
  require(n_samples >= 1, "need at least one sample");

  const GridSpec g = resolve_grid(params, T, opts.dt);
  const Coeffs c = coeffs(params, g.dt, opts.scheme, 1.0);
  const double p = params.p;
  const double lo = x - delta, hi = x + delta;
  const std::uint64_t hits =
      count_hits(c, g, n_samples, seed, opts.mode, [&](const PathSample& ps) {
        const double value = time_average(ps, p);
        return value > lo && value < hi;
      });
  return finish_tail(x, T, n_samples, hits, params.alpha());
}

TailEstimate single_excursion_tail(const ModelParams& params, double eps0,
                                   double x, double T, std::uint64_t n_cycles,
                                   std::uint64_t seed, const McOptions& opts) {
  params.validate();
  require(eps0 > 0.0, "eps0 must be positive");
  require(!std::isnan(x), "x must not be NaN");
  require(std::isfinite(T) && T > 0.0, "T must be positive and finite");
  require(n_cycles >= 1, "need at least one cycle");

  const double dt = opts.dt > 0.0 ? opts.dt : 0.01 / params.gamma;
  const Coeffs c = coeffs(params, dt, opts.scheme, 1.0);
  const double p = params.p;
  // A cycle this long has probability ~ exp(-Theta(cap * dt)); hitting the
  // cap indicates a configuration error rather than an unlucky draw.
  const std::size_t cap =
      static_cast<std::size_t>(std::llround(1.0e5 / dt));

  struct Acc {
    std::uint64_t hits = 0;
    std::uint64_t truncated = 0;
  };
  const auto partial = run_chunked<Acc>(
      n_cycles, kDefaultChunk, opts.mode,
      [&](std::uint64_t begin, std::uint64_t end) {
        Acc acc;
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          rng::GaussianStream zs(seed, rep);
          detail::ExcursionStream stream(eps0, p, 0.0, 0.0);
          double xv = 0.0;
          bool done = false;
          for (std::size_t k = 1; k <= cap; ++k) {
            xv = c.a * xv + c.s * zs.next();
            if (stream.feed(static_cast<double>(k) * dt, xv)) {
              done = true;
              break;
            }
          }
          if (!done) {
            ++acc.truncated;
          } else if (stream.last_record().cycle_integral / T >= x) {
            ++acc.hits;
          }
        }
        return acc;
      });
  std::uint64_t hits = 0, truncated = 0;
  for (const Acc& a : partial) {
    hits += a.hits;
    truncated += a.truncated;
  }
  if (truncated > 0)
    throw error("single_excursion_tail: cycle exceeded the step cap");
  return finish_tail(x, T, n_cycles, hits, params.alpha());
}

bool DriftControl::null_tilt() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return v == 0.0; });
}

double DriftControl::at(double t) const {
  if (values.empty() || t < 0.0) return 0.0;
  const double pos = t / dt;
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= values.size()) {
    return pos <= static_cast<double>(values.size() - 1) ? values.back() : 0.0;
  }
  const double w = pos - static_cast<double>(k);
  return values[k] + w * (values[k + 1] - values[k]);
}

DriftControl scale_control(std::span<const double> phi, double dt, double T,
                           double x, double p) {
  require(dt > 0.0 && std::isfinite(dt), "control dt must be positive");
  require(std::isfinite(T) && T > 0.0, "T must be positive and finite");
  require(std::isfinite(x) && x > 0.0, "x must be positive");
  require(p > 0.0, "p must be positive");
  const double c = std::pow(T * x, 1.0 / p);
  DriftControl out;
  out.dt = dt;
  out.values.assign(phi.begin(), phi.end());
  for (double& v : out.values) v *= c;
  return out;
}

ISEstimate tilted_tail_is(const ModelParams& params, double x, double T,
                          std::uint64_t n_samples, std::uint64_t seed,
                          const DriftControl& control, const McOptions& opts) {
  params.validate();
  require(!std::isnan(x), "x must not be NaN");
  require(std::isfinite(T) && T > 0.0, "T must be positive and finite");
  require(n_samples >= 1, "need at least one sample");

  const GridSpec g = resolve_grid(params, T, opts.dt);
  const Coeffs c = coeffs(params, g.dt, opts.scheme, 1.0);
  const double p = params.p;
  const bool tilt = !control.null_tilt();

  // Exact per-step mean increments m_k of the control path under the chain
  // x' = a x + s z; adding m_k and weighting by
  //   exp(-sum m_k z_k / s - sum m_k^2 / (2 s^2))
  // is an exact change of measure for the discrete chain, so the estimate
  // is unbiased at any dt.
  std::vector<double> m, u;
  double half_u2 = 0.0;
  if (tilt) {
    require(control.dt > 0.0, "control dt must be positive");
    m.resize(g.n_steps);
    u.resize(g.n_steps);
    double xi_prev = control.at(0.0);
    for (std::size_t k = 1; k <= g.n_steps; ++k) {
      const double xi = control.at(static_cast<double>(k) * g.dt);
      m[k - 1] = xi - c.a * xi_prev;
      u[k - 1] = m[k - 1] / c.s;
      half_u2 += 0.5 * u[k - 1] * u[k - 1];
      xi_prev = xi;
    }
  }

  struct Acc {
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    std::uint64_t hits = 0;
  };
  const auto partial = run_chunked<Acc>(
      n_samples, kDefaultChunk, opts.mode,
      [&](std::uint64_t begin, std::uint64_t end) {
        PathSample ps;
        ps.grid = TimeGrid{0.0, g.dt, g.n_steps};
        ps.values.assign(g.n_steps + 1, 0.0);
        Acc acc;
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          rng::GaussianStream zs(seed, rep);
          double xv = 0.0;
          double dot = 0.0;
          if (tilt) {
            for (std::size_t k = 1; k <= g.n_steps; ++k) {
              const double z = zs.next();
              xv = c.a * xv + c.s * z + m[k - 1];
              dot -= u[k - 1] * z;
              ps.values[k] = xv;
            }
          } else {
            // Identical arithmetic to the naive estimator, so a null tilt
            // reproduces it hit for hit.
            for (std::size_t k = 1; k <= g.n_steps; ++k) {
              xv = c.a * xv + c.s * zs.next();
              ps.values[k] = xv;
            }
          }
          if (time_average(ps, p) >= x) {
            const double w = tilt ? std::exp(dot - half_u2) : 1.0;
            acc.sum_w += w;
            acc.sum_w2 += w * w;
            ++acc.hits;
          }
        }
        return acc;
      });

  double sum_w = 0.0, sum_w2 = 0.0;
  std::uint64_t hits = 0;
  for (const Acc& a : partial) {
    sum_w += a.sum_w;
    sum_w2 += a.sum_w2;
    hits += a.hits;
  }

  ISEstimate e;
  e.threshold_x = x;
  e.horizon_T = T;
  e.n_samples = n_samples;
  e.n_hits = hits;
  const double n = static_cast<double>(n_samples);
  e.p_hat = sum_w / n;
  const double m2 = sum_w2 / n;
  const double var =
      n > 1.0 ? std::max(0.0, (m2 - e.p_hat * e.p_hat) * n / (n - 1.0)) : 0.0;
  e.weight_variance = var;
  const double se = std::sqrt(var / n);
  e.ci = Interval{std::max(0.0, e.p_hat - kZ95 * se),
                  std::min(1.0, e.p_hat + kZ95 * se)};
  e.effective_sample_size = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
  e.degenerate = e.effective_sample_size < 10.0;
  const double speed = std::pow(T, params.alpha());
  if (e.p_hat > 0.0) {
    e.scaled_rate = -std::log(e.p_hat) / speed;
    e.scaled_rate_se = se / (e.p_hat * speed);
  } else {
    e.bound_only = true;
    e.scaled_rate = kNan;
    e.scaled_rate_se = kNan;
  }
  return e;
}

ISEstimate tilted_tail_is(const ModelParams& params, double x, double T,
                          std::uint64_t n_samples, std::uint64_t seed,
                          std::span<const DriftControl> controls,
                          const McOptions& opts) {
  params.validate();
  require(!std::isnan(x), "x must not be NaN");
  require(std::isfinite(T) && T > 0.0, "T must be positive and finite");
  require(!controls.empty(), "need at least one control");
  const std::size_t M = controls.size();
  require(n_samples >= M && n_samples % M == 0,
          "sample count must be a positive multiple of the control count");

  const GridSpec g = resolve_grid(params, T, opts.dt);
  const Coeffs c = coeffs(params, g.dt, opts.scheme, 1.0);
  const double p = params.p;

  // Normalized per-step mean shifts u^(m) of every control, and the
  // squared norm each contributes to its own log density.
  std::vector<std::vector<double>> u(M);
  std::vector<double> half_u2(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    require(controls[m].dt > 0.0 || controls[m].values.empty(),
            "control dt must be positive");
    u[m].resize(g.n_steps);
    double xi_prev = controls[m].at(0.0);
    for (std::size_t k = 1; k <= g.n_steps; ++k) {
      const double xi = controls[m].at(static_cast<double>(k) * g.dt);
      u[m][k - 1] = (xi - c.a * xi_prev) / c.s;
      half_u2[m] += 0.5 * u[m][k - 1] * u[m][k - 1];
      xi_prev = xi;
    }
  }

  struct Acc {
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    std::uint64_t hits = 0;
  };
  const auto partial = run_chunked<Acc>(
      n_samples, kDefaultChunk, opts.mode,
      [&](std::uint64_t begin, std::uint64_t end) {
        PathSample ps;
        ps.grid = TimeGrid{0.0, g.dt, g.n_steps};
        ps.values.assign(g.n_steps + 1, 0.0);
        std::vector<double> dot(M);
        Acc acc;
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          const std::size_t j = static_cast<std::size_t>(rep % M);
          rng::GaussianStream zs(seed, rep);
          double xv = 0.0;
          std::fill(dot.begin(), dot.end(), 0.0);
          for (std::size_t k = 1; k <= g.n_steps; ++k) {
            const double z = zs.next();
            xv = c.a * xv + c.s * (z + u[j][k - 1]);
            ps.values[k] = xv;
            // zeta = z + u^(j): the path's noise in untilted coordinates
            const double zeta = z + u[j][k - 1];
            for (std::size_t m = 0; m < M; ++m)
              dot[m] += u[m][k - 1] * zeta;
          }
          if (time_average(ps, p) >= x) {
            // w = M / sum_m exp(eta_m), eta_m = <u_m, zeta> - |u_m|^2 / 2
            double eta_max = -std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < M; ++m)
              eta_max = std::max(eta_max, dot[m] - half_u2[m]);
            double denom = 0.0;
            for (std::size_t m = 0; m < M; ++m)
              denom += std::exp(dot[m] - half_u2[m] - eta_max);
            const double w =
                static_cast<double>(M) * std::exp(-eta_max) / denom;
            acc.sum_w += w;
            acc.sum_w2 += w * w;
            ++acc.hits;
          }
        }
        return acc;
      });

  double sum_w = 0.0, sum_w2 = 0.0;
  std::uint64_t hits = 0;
  for (const Acc& a : partial) {
    sum_w += a.sum_w;
    sum_w2 += a.sum_w2;
    hits += a.hits;
  }

  ISEstimate e;
  e.threshold_x = x;
  e.horizon_T = T;
  e.n_samples = n_samples;
  e.n_hits = hits;
  const double n = static_cast<double>(n_samples);
  e.p_hat = sum_w / n;
  const double m2 = sum_w2 / n;
  const double var =
      n > 1.0 ? std::max(0.0, (m2 - e.p_hat * e.p_hat) * n / (n - 1.0)) : 0.0;
  e.weight_variance = var;
  const double se = std::sqrt(var / n);
  e.ci = Interval{std::max(0.0, e.p_hat - kZ95 * se),
                  std::min(1.0, e.p_hat + kZ95 * se)};
  e.effective_sample_size = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
  e.degenerate = e.effective_sample_size < 10.0;
  const double speed = std::pow(T, params.alpha());
  if (e.p_hat > 0.0) {
    e.scaled_rate = -std::log(e.p_hat) / speed;
    e.scaled_rate_se = se / (e.p_hat * speed);
  } else {
    e.bound_only = true;
    e.scaled_rate = kNan;
    e.scaled_rate_se = kNan;
  }
  return e;
}

std::vector<DriftControl> shifted_controls(const DriftControl& base,
                                           std::size_t n_shifts,
                                           double stride) {
  require(n_shifts >= 1, "need at least one shift");
  require(stride > 0.0 && std::isfinite(stride), "stride must be positive");
  require(base.dt > 0.0, "control dt must be positive");
  std::vector<DriftControl> out;
  out.reserve(n_shifts);
  for (std::size_t m = 0; m < n_shifts; ++m) {
    DriftControl shifted;
    shifted.dt = base.dt;
    const auto pad = static_cast<std::size_t>(
        std::llround(static_cast<double>(m) * stride / base.dt));
    shifted.values.assign(pad, 0.0);
    shifted.values.insert(shifted.values.end(), base.values.begin(),
                          base.values.end());
    out.push_back(std::move(shifted));
  }
  return out;
}

std::vector<SmallNoiseRow> small_noise_check(
    const ModelParams& params, double H, double x_lo, double x_hi,
    std::span<const double> eps_list, std::span<const std::uint64_t> budgets,
    std::uint64_t seed, const McOptions& opts) {
  params.validate();
  require(std::isfinite(H) && H > 0.0, "H must be positive and finite");
  require(!std::isnan(x_lo) && !std::isnan(x_hi) && x_lo < x_hi,
          "need a nonempty interval");
  require(!eps_list.empty(), "eps_list must not be empty");
  require(budgets.size() == eps_list.size(),
          "one budget per eps is required");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    require(std::isfinite(eps_list[i]) && eps_list[i] > 0.0,
            "eps must be positive");
    require(i == 0 || eps_list[i] < eps_list[i - 1],
            "eps_list must be strictly decreasing");
    require(budgets[i] >= 1, "need at least one sample per eps");
  }

  const GridSpec g = resolve_grid(params, H, opts.dt);
  const double p = params.p;

  std::vector<SmallNoiseRow> rows;
  rows.reserve(eps_list.size());
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    const std::uint64_t n = budgets[i];
    const Coeffs c = coeffs(params, g.dt, opts.scheme, eps);
    const std::uint64_t row_seed = rng::derive_seed(seed, i);
    const std::uint64_t hits =
        count_hits(c, g, n, row_seed, opts.mode, [&](const PathSample& ps) {
          const double f = signed_power_integral(ps.values, g.dt, p);
          return f > x_lo && f < x_hi;
        });

    SmallNoiseRow row;
    row.eps = eps;
    row.n_samples = n;
    row.n_hits = hits;
    row.p_hat = static_cast<double>(hits) / static_cast<double>(n);
    const double e2 = eps * eps;
    if (hits > 0) {
      row.eps2_log_p = e2 * std::log(row.p_hat);
      row.se = e2 * std::sqrt(static_cast<double>(n - hits) /
                              (static_cast<double>(n) *
                               static_cast<double>(hits)));
    } else {
      row.bound_only = true;
      row.eps2_log_p = e2 * std::log(wilson_interval(0, n).hi);
      row.se = kNan;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SmallNoiseRow> small_noise_check(const ModelParams& params,
                                             double H, double x_lo,
                                             double x_hi,
                                             std::span<const double> eps_list,
                                             std::uint64_t n_samples,
                                             std::uint64_t seed,
                                             const McOptions& opts) {
  const std::vector<std::uint64_t> budgets(eps_list.size(), n_samples);
  return small_noise_check(params, H, x_lo, x_hi, eps_list, budgets, seed,
                           opts);
}

PowerLawFit rate_convergence_fit(std::span<const TailEstimate> estimates) {
  if (estimates.size() < 3)
    throw insufficient_data("rate_convergence_fit: need at least 3 horizons");
  for (const TailEstimate& e : estimates) {
    if (e.n_hits == 0)
      throw insufficient_data(
          "rate_convergence_fit: every horizon needs at least one hit");
  }
  const double x0 = estimates.front().threshold_x;
  for (const TailEstimate& e : estimates) {
    require(std::abs(e.threshold_x - x0) <=
                1e-12 * std::max(1.0, std::abs(x0)),
            "estimates must share a threshold");
  }

  std::vector<std::size_t> order(estimates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return estimates[a].horizon_T < estimates[b].horizon_T;
  });
  std::vector<double> t, y, noise;
  for (const std::size_t k : order) {
    t.push_back(estimates[k].horizon_T);
    y.push_back(estimates[k].scaled_rate);
    noise.push_back(estimates[k].scaled_rate_se);
  }
  return fit_power_approach(t, y, noise);
}

}  // namespace heavytail
