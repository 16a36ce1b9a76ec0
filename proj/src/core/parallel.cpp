/*
 * Copyright (c) 2026 The HERO Lab Authors. All Rights Reserved
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace herolab
{

namespace
{

std::atomic<std::size_t> g_override{0};

std::size_t env_limit()
{
  static const std::size_t limit = [] {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char *env = std::getenv("HERO_LAB_THREADS"))
    {
      try
      {
        long v = std::stol(env);
        if (v >= 1)
          return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
      }
      catch (const std::exception &)
      {
      }
    }
    return hw;
  }();
  return limit;
}

} // namespace

std::size_t thread_limit()
{
  auto o = g_override.load();
  return o ? o : env_limit();
}

void set_thread_limit(std::size_t n) { g_override.store(n); }

void parallel_for(std::size_t n, std::size_t min_chunk, const std::function<void(std::size_t, std::size_t)> &body)
{
  if (n == 0)
    return;
  const std::size_t workers = std::min(thread_limit(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
  if (workers <= 1)
  {
    body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  // a throw inside a worker must reach the caller, not std::terminate
  std::vector<std::exception_ptr> errors(workers);
  auto guarded = [&](std::size_t w, std::size_t b, std::size_t e) {
    try
    {
      body(b, e);
    }
    catch (...)
    {
      errors[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
    {
      std::size_t b = w * chunk, e = std::min(n, b + chunk);
      if (b < e)
        pool.emplace_back(guarded, w, b, e);
    }
    guarded(0, 0, std::min(n, chunk));
  }
  for (auto &err : errors)
    if (err)
      std::rethrow_exception(err);
}

} // namespace herolab
