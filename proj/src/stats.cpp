// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heavytail/errors.hpp"

namespace heavytail {

Interval wilson_interval(std::uint64_t hits, std::uint64_t n, double z) {
  require(n > 0, "wilson_interval: n must be positive");
  require(hits <= n, "wilson_interval: hits must not exceed n");
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (ph + z2 / (2.0 * nn)) / denom;
  const double half =
      (z / denom) * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn));
  return Interval{std::max(0.0, center - half), std::min(1.0, center + half)};
}

double MeanVar::se() const {
  return n > 1 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
}

MeanVar mean_variance(const std::vector<double>& xs) {
  if (xs.empty()) throw insufficient_data("mean_variance: empty sample");
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  const double var =
      xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
  return MeanVar{mean, var, xs.size()};
}

double lag1_autocorrelation(const std::vector<double>& xs) {
  if (xs.size() < 3) throw insufficient_data("lag1: need at least 3 points");
  const MeanVar mv = mean_variance(xs);
  if (mv.variance == 0.0) return 0.0;
  double num = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    num += (xs[i] - mv.mean) * (xs[i + 1] - mv.mean);
  }
  const double den = mv.variance * static_cast<double>(xs.size() - 1);
  return num / den;
}

namespace {

// Linear LS of y ~ a + b*g for a fixed basis g; returns (a, b, sse).
struct LinFit {
  double a, b, sse;
};

LinFit linear_ls(const std::vector<double>& g, const std::vector<double>& y) {
  const std::size_t n = g.size();
  double sg = 0.0, sy = 0.0, sgg = 0.0, sgy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sg += g[i];
    sy += y[i];
    sgg += g[i] * g[i];
    sgy += g[i] * y[i];
  }
  const double nn = static_cast<double>(n);
  const double det = nn * sgg - sg * sg;
  double a, b;
  if (std::fabs(det) < 1e-30 * std::max(1.0, nn * sgg)) {
    a = sy / nn;
    b = 0.0;
  } else {
    b = (nn * sgy - sg * sy) / det;
    a = (sy - b * sg) / nn;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - a - b * g[i];
    sse += r * r;
  }
  return LinFit{a, b, sse};
}

template <class Basis>
double scan_and_polish(const std::vector<double>& x,
                       const std::vector<double>& y, double lo, double hi,
                       Basis&& basis) {
  // log-grid scan for the decay parameter, then golden-section polish
  auto sse_at = [&](double beta) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = basis(x[i], beta);
    return linear_ls(g, y).sse;
  };
  const int n_scan = 400;
  double best = lo, best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n_scan; ++i) {
    const double beta =
        lo * std::pow(hi / lo, static_cast<double>(i) / n_scan);
    const double s = sse_at(beta);
    if (s < best_sse) {
      best_sse = s;
      best = beta;
    }
  }
  double a = best / 1.6, b = std::min(hi, best * 1.6);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = sse_at(c1), f2 = sse_at(c2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = sse_at(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = sse_at(c2);
    }
    if (b - a < 1e-12 * std::max(1.0, a)) break;
  }
  return 0.5 * (a + b);
}

}  // namespace

ExpDecayFit fit_exp_decay(const std::vector<double>& h,
                          const std::vector<double>& y) {
  if (h.size() != y.size()) throw invalid_input("fit_exp_decay: size mismatch");
  if (h.size() < 2) throw insufficient_data("fit_exp_decay: need >= 2 points");

  // Flat data: no decay term to identify.
  double ymin = y[0], ymax = y[0];
  for (const double v : y) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  const double scale = std::max(std::fabs(ymin), std::fabs(ymax));
  if (ymax - ymin <= 1e-13 * std::max(1.0, scale)) {
    double mean = 0.0;
    for (const double v : y) mean += v;
    return ExpDecayFit{mean / static_cast<double>(y.size()), 0.0, 0.0, 0.0};
  }

  double hspan = 0.0;
  for (const double v : h) hspan = std::max(hspan, std::fabs(v));
  const double lo = 1e-3 / std::max(1.0, hspan), hi = 50.0;
  auto basis = [](double hh, double beta) { return std::exp(-beta * hh); };
  const double beta = scan_and_polish(h, y, lo, hi, basis);
  std::vector<double> g(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) g[i] = basis(h[i], beta);
  const LinFit f = linear_ls(g, y);
  return ExpDecayFit{f.a, f.b, beta,
                     std::sqrt(f.sse / static_cast<double>(h.size()))};
}

PowerLawFit fit_power_approach(const std::vector<double>& t,
                               const std::vector<double>& y,
                               const std::vector<double>& noise) {
  if (t.size() != y.size())
    throw invalid_input("fit_power_approach: size mismatch");
  if (t.size() < 3)
    throw insufficient_data("fit_power_approach: need >= 3 points");

  PowerLawFit out;
  // Monotonicity beyond noise decides reliability of the extrapolation.
  bool increasing = true, decreasing = true;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    const double tol =
        noise.empty() ? 0.0
                      : 2.0 * std::sqrt(noise[i] * noise[i] +
                                        noise[i + 1] * noise[i + 1]);
    if (y[i + 1] < y[i] - tol) increasing = false;
    if (y[i + 1] > y[i] + tol) decreasing = false;
  }
  out.reliable = increasing || decreasing;

  double ymin = y[0], ymax = y[0];
  for (const double v : y) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  if (ymax - ymin <= 1e-13 * std::max(1.0, std::fabs(ymax))) {
    double mean = 0.0;
    for (const double v : y) mean += v;
    out.a = mean / static_cast<double>(y.size());
    out.b = 0.0;
    out.c = 1.0;
    out.rms = 0.0;
    return out;
  }

  // Decade grid for the decay exponent.  A continuous scan is degenerate
  // when the data accelerate: c -> 0 makes the basis collinear with the
  // intercept and the plateau estimate diverges.
  auto basis = [](double tt, double c) { return std::pow(tt, -c); };
  double best_c = 1.0, best_sse = std::numeric_limits<double>::infinity();
  LinFit best_fit{0.0, 0.0, 0.0};
  std::vector<double> g(t.size());
  for (int i = 1; i <= 10; ++i) {
    const double c = 0.1 * static_cast<double>(i);
    for (std::size_t j = 0; j < t.size(); ++j) g[j] = basis(t[j], c);
    const LinFit f = linear_ls(g, y);
    if (f.sse < best_sse) {
      best_sse = f.sse;
      best_c = c;
      best_fit = f;
    }
  }
  out.a = best_fit.a;
  out.b = best_fit.b;
  out.c = best_c;
  out.rms = std::sqrt(best_sse / static_cast<double>(t.size()));
  return out;
}

}  // namespace heavytail
