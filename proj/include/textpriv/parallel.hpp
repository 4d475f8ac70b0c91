// Copyright 2026 The textpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace textpriv {

// 0 means "use the available hardware parallelism".
inline std::size_t resolve_jobs(std::size_t jobs) {
  if (jobs != 0) return jobs;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Splits [0, n) into at most `jobs` contiguous ranges and calls
// fn(worker, begin, end) for each on its own thread. The first exception
// thrown by any worker is rethrown after all workers have joined.
template <class Fn>
void parallel_for_ranges(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min(resolve_jobs(jobs), n);
  if (workers == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      const std::size_t begin = n * t / workers;
      const std::size_t end = n * (t + 1) / workers;
      threads.emplace_back([&, t, begin, end] {
        try {
          fn(t, begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace textpriv
