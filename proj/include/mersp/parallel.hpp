// Copyright 2026 The Authors.
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

#include <atomic>
#include <exception>
#include <future>
#include <optional>
#include <thread>
#include <vector>

namespace mersp {

/// Applies fn(0..count-1) possibly concurrently and returns the results in
/// index order, so any reduction over them is deterministic regardless of
/// scheduling. The lowest-index exception is rethrown.
template <typename Fn>
auto parallel_map(int count, Fn&& fn, int threads = 0)
    -> std::vector<std::invoke_result_t<Fn, int>> {
  using R = std::invoke_result_t<Fn, int>;
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);
  if (workers <= 1) {
    std::vector<R> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(fn(i));
    return out;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, worker));
  }
  for (auto& f : futures) f.get();
  for (int i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
  std::vector<R> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(std::move(*slots[i]));
  return out;
}

}  // namespace mersp
