// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/rng.hpp"

#include <cmath>

#include "heavytail/errors.hpp"

namespace heavytail::rng {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t prod =
      static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

PhiloxBlock philox4x32(const std::array<std::uint32_t, 4>& counter,
                       const std::array<std::uint32_t, 2>& key) {
  std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2],
                c3 = counter[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM4x32A, c0, hi0, lo0);
    mulhilo(kPhiloxM4x32B, c2, hi1, lo1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    if (round < 9) {
      k0 += kPhiloxW32A;
      k1 += kPhiloxW32B;
    }
  }
  return PhiloxBlock{{c0, c1, c2, c3}};
}

double normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw invalid_input("normal_inv_cdf: p in (0,1)");
  const double q = p - 0.5;
  double r, num, den;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    num = (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
              1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
            1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    den = (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
              5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
            4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

namespace {

inline PhiloxBlock stream_block(std::uint64_t seed, std::uint64_t replicate,
                                std::uint64_t block) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block),
      static_cast<std::uint32_t>(block >> 32),
      static_cast<std::uint32_t>(replicate),
      static_cast<std::uint32_t>(replicate >> 32)};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return philox4x32(ctr, key);
}

}  // namespace

double normal_at(std::uint64_t seed, std::uint64_t replicate, std::uint64_t k) {
  const PhiloxBlock b = stream_block(seed, replicate, k >> 1);
  const int lane = static_cast<int>(k & 1);
  return normal_inv_cdf(u01(b.v[2 * lane], b.v[2 * lane + 1]));
}

double uniform_at(std::uint64_t seed, std::uint64_t replicate,
                  std::uint64_t k) {
  const PhiloxBlock b = stream_block(seed, replicate, k >> 1);
  const int lane = static_cast<int>(k & 1);
  return u01(b.v[2 * lane], b.v[2 * lane + 1]);
}

void GaussianStream::load(std::uint64_t block) {
  const PhiloxBlock b = stream_block(seed_, replicate_, block);
  lane_[0] = normal_inv_cdf(u01(b.v[0], b.v[1]));
  lane_[1] = normal_inv_cdf(u01(b.v[2], b.v[3]));
  cached_block_ = block;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(purpose),
      static_cast<std::uint32_t>(purpose >> 32), 0x5eedu, 0xd1feu};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(master),
      static_cast<std::uint32_t>(master >> 32)};
  const PhiloxBlock b = philox4x32(ctr, key);
  return (static_cast<std::uint64_t>(b.v[0]) << 32) | b.v[1];
}

}  // namespace heavytail::rng
