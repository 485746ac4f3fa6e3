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
#include <vector>

namespace heavytail {

enum class Execution {
  serial,  // plain reference loop, no OpenMP involvement
  openmp   // OpenMP over fixed-size chunks
};

// Replicates [0, n) are processed in fixed chunks of `chunk_size`.  Each
// chunk produces one Accum, filled strictly in replicate order inside the
// chunk; chunk results land in a vector indexed by chunk number and are
// folded in index order by the caller.  The result is therefore identical
// for any thread count, including the serial reference path.
inline constexpr std::uint64_t kDefaultChunk = 4096;

template <class Accum, class PerChunk>
std::vector<Accum> run_chunked(std::uint64_t n, std::uint64_t chunk_size,
                               Execution mode, PerChunk&& per_chunk) {
  const std::uint64_t n_chunks =
      chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
  std::vector<Accum> results(n_chunks);
  if (mode == Execution::serial) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
      const std::uint64_t lo = c * chunk_size;
      const std::uint64_t hi = lo + chunk_size < n ? lo + chunk_size : n;
      results[c] = per_chunk(lo, hi);
    }
    return results;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
    const std::uint64_t lo = static_cast<std::uint64_t>(c) * chunk_size;
    const std::uint64_t hi = lo + chunk_size < n ? lo + chunk_size : n;
    results[static_cast<std::size_t>(c)] = per_chunk(lo, hi);
  }
  return results;
}

}  // namespace heavytail
