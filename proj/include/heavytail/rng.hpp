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

#include <array>
#include <cstdint>

namespace heavytail::rng {

// Philox4x32-10 counter-based generator.  A block is a pure function of
// (counter, key), so any (seed, replicate, step) triple can be evaluated
// independently and in any order; parallel runs reproduce serial runs
// bit for bit.
struct PhiloxBlock {
  std::array<std::uint32_t, 4> v;
};

PhiloxBlock philox4x32(const std::array<std::uint32_t, 4>& counter,
                       const std::array<std::uint32_t, 2>& key);

// Double in the open interval (0,1) built from 52 random bits; the +0.5
// offset keeps both endpoints excluded (with 53 bits the top value would
// round to exactly 1).
inline double u01(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Inverse of the standard normal CDF (Wichura's AS241, double precision).
double normal_inv_cdf(double p);

// Standard normal draw indexed by (seed, replicate, k).  One Philox block
// yields two draws; k selects the block k/2 and the lane k%2.
double normal_at(std::uint64_t seed, std::uint64_t replicate, std::uint64_t k);

// Sequential view over the same stream; caches the current block so that
// consecutive k are cheap.  z(k) for arbitrary k stays available.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t replicate)
      : seed_(seed), replicate_(replicate) {}

  double z(std::uint64_t k) {
    const std::uint64_t block = k >> 1;
    if (block != cached_block_) load(block);
    return lane_[k & 1];
  }

  double next() { return z(next_k_++); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t replicate() const { return replicate_; }

 private:
  void load(std::uint64_t block);

  std::uint64_t seed_;
  std::uint64_t replicate_;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::uint64_t next_k_ = 0;
  double lane_[2] = {0.0, 0.0};
};

// Uniform draw in (0,1) indexed by (seed, replicate, k); same block layout
// as normal_at.
double uniform_at(std::uint64_t seed, std::uint64_t replicate, std::uint64_t k);

// Stable sub-seed for a named purpose (component tag), so independent
// consumers of one master seed never share a stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose);

}  // namespace heavytail::rng
