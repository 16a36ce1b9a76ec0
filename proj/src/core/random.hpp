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

#ifndef HERO_LAB_CORE_RANDOM_HPP
#define HERO_LAB_CORE_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace herolab
{

// Named sub-seed so each component (data, init, noise, contour, ...) draws from
// its own stream given one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

// mt19937_64 with hand-rolled conversions: the <random> distributions are
// implementation-defined, and runs must be bit-reproducible across toolchains.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : _engine(seed) {}

  std::uint64_t next() { return _engine(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(_engine() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  double normal();

private:
  std::mt19937_64 _engine;
  double _spare = 0.0;
  bool _has_spare = false;
};

} // namespace herolab

#endif // HERO_LAB_CORE_RANDOM_HPP
