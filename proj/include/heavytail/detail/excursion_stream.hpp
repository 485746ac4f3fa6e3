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

#include "heavytail/excursion.hpp"
#include "heavytail/ou.hpp"

namespace heavytail::detail {

// Streaming cycle detector.  Feed consecutive samples; the integrand is
// interpolated linearly between grid points and split exactly at crossing
// times, which keeps the cycle decomposition additive to rounding error.
class ExcursionStream {
 public:
  ExcursionStream(double eps0, double p, double t0, double x0)
      : eps0_(eps0),
        f_(p),
        t_prev_(t0),
        x_prev_(x0),
        g_prev_(f_(x0)),
        cycle_start_(t0) {}

  // Returns true when this sample completes a cycle; the record is then
  // available in last_record().
  bool feed(double t, double x) {
    const double g = f_(x);
    bool completed = false;
    if (phase_ == 0) {
      if (x_prev_ < eps0_ && x >= eps0_) {
        depart_ = t_prev_ + (t - t_prev_) * (eps0_ - x_prev_) / (x - x_prev_);
        phase_ = 1;
      }
      acc_ += (t - t_prev_) * 0.5 * (g_prev_ + g);
    } else if (x_prev_ > 0.0 && x <= 0.0) {
      const double tc = t_prev_ + (t - t_prev_) * x_prev_ / (x_prev_ - x);
      const double gc =
          g_prev_ + (g - g_prev_) * (tc - t_prev_) / (t - t_prev_);
      const double head = (tc - t_prev_) * 0.5 * (g_prev_ + gc);
      last_ = ExcursionRecord{depart_, tc, acc_ + head, tc - cycle_start_};
      completed = true;
      ++count_;
      acc_ = (t - tc) * 0.5 * (gc + g);
      cycle_start_ = tc;
      depart_ = -1.0;
      phase_ = 0;
    } else {
      acc_ += (t - t_prev_) * 0.5 * (g_prev_ + g);
    }
    t_prev_ = t;
    x_prev_ = x;
    g_prev_ = g;
    return completed;
  }

  const ExcursionRecord& last_record() const { return last_; }
  double remainder() const { return acc_; }
  std::size_t count() const { return count_; }

 private:
  double eps0_;
  SignedPower f_;
  double t_prev_, x_prev_, g_prev_;
  int phase_ = 0;  // 0: awaiting departure; 1: departed, awaiting return
  double cycle_start_;
  double depart_ = -1.0;
  double acc_ = 0.0;
  std::size_t count_ = 0;
  ExcursionRecord last_;
};

}  // namespace heavytail::detail
