// include/omr/threading.hpp

// Copyright 2026  omr-toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef OMR_THREADING_HPP_
#define OMR_THREADING_HPP_

#include <cstdlib>
#include <thread>
#include <vector>

namespace omr {

// Worker parallelism cap. OMRF_THREADS=0 means strict single-threaded;
// unset means hardware concurrency. Read once per process.
inline int max_threads() {
  static const int cached = [] {
    if (const char* env = std::getenv("OMRF_THREADS")) {
      int v = std::atoi(env);
      return v <= 0 ? 1 : v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

// Runs fn(begin, end) over a contiguous partition of [0, n). Every index is
// handled by exactly one invocation, so any computation whose outputs are
// disjoint per index is bit-identical for every thread count.
template <class Fn>
void parallel_rows(std::size_t n, std::size_t work_estimate, Fn&& fn) {
  const int threads = max_threads();
  if (threads <= 1 || n < 2 || work_estimate < (1u << 15)) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t parts =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(parts);
  const std::size_t chunk = (n + parts - 1) / parts;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t b = p * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace omr

#endif  // OMR_THREADING_HPP_
