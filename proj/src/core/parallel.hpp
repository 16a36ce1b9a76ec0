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

#ifndef HERO_LAB_CORE_PARALLEL_HPP
#define HERO_LAB_CORE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace herolab
{

// Worker cap: HERO_LAB_THREADS if set, else hardware concurrency.
std::size_t thread_limit();
// Overrides the cap for this process; 0 restores the environment default.
void set_thread_limit(std::size_t n);

// Splits [0, n) into contiguous chunks. Callers must write disjoint outputs per
// index so results do not depend on the partition.
void parallel_for(std::size_t n, std::size_t min_chunk, const std::function<void(std::size_t, std::size_t)> &body);

} // namespace herolab

#endif // HERO_LAB_CORE_PARALLEL_HPP
