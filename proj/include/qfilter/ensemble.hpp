// Copyright 2026 The qfilter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Deterministic parallel ensembles.
//
// Trajectory i always draws from RngStream(seed, i), and results are stored
// by index, so the output does not depend on the worker count or on thread
// scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qfilter/errors.hpp"
#include "qfilter/rng.hpp"

namespace qfilter {

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Calls fn(rng, index) for index in [0, n) and returns the results in index
/// order. An exception from trajectory i is rethrown as TrajectoryError(i);
/// when several fail, the lowest index wins.
template <class Fn>
auto run_ensemble(std::size_t n, std::uint64_t seed, unsigned workers, Fn&& fn)
    -> std::vector<decltype(fn(std::declval<RngStream&>(), std::size_t{}))> {
  using Result = decltype(fn(std::declval<RngStream&>(), std::size_t{}));
  std::vector<Result> out(n);
  if (n == 0) return out;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t failed_index = n;
  std::string failed_what;

  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        RngStream rng(seed, i);
        out[i] = fn(rng, i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failed_what = e.what();
        }
        failed.store(true);
      }
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw TrajectoryError(failed_index, failed_what);
  return out;
}

}  // namespace qfilter
