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

#ifndef HERO_LAB_CORE_PARAMS_HPP
#define HERO_LAB_CORE_PARAMS_HPP

#include "core/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace herolab
{

enum class ParamKind
{
  Weight,
  Bias,
  BnScale,
  BnShift,
};

const char *to_string(ParamKind kind);
ParamKind param_kind_from_string(std::string_view s);

struct ParamEntry
{
  std::string name;
  Tensor tensor;
  ParamKind kind = ParamKind::Weight;
  bool trainable = true;
  bool perturbable = true;
};

// Ordered, uniquely named parameter tensors. Perturbable entries are exactly the
// trainable weight-kind entries.
class ParamSet
{
public:
  void add(std::string name, Tensor tensor, ParamKind kind, bool trainable = true);

  std::size_t size() const noexcept { return _entries.size(); }
  bool empty() const noexcept { return _entries.empty(); }

  ParamEntry &operator[](std::size_t i) { return _entries[i]; }
  const ParamEntry &operator[](std::size_t i) const { return _entries[i]; }

  const ParamEntry *find(std::string_view name) const noexcept;
  ParamEntry *find(std::string_view name) noexcept;
  const Tensor &tensor(std::string_view name) const;

  auto begin() noexcept { return _entries.begin(); }
  auto end() noexcept { return _entries.end(); }
  auto begin() const noexcept { return _entries.begin(); }
  auto end() const noexcept { return _entries.end(); }

  std::size_t element_count() const noexcept;

  friend bool operator==(const ParamSet &, const ParamSet &);

private:
  std::vector<ParamEntry> _entries;
};

bool operator==(const ParamEntry &a, const ParamEntry &b);

struct NamedTensor
{
  std::string name;
  Tensor tensor;

  friend bool operator==(const NamedTensor &, const NamedTensor &) = default;
};

// Gradient (or any per-parameter tensor field) over the trainable entries of a
// ParamSet, in the same order.
class GradientSet
{
public:
  GradientSet() = default;
  explicit GradientSet(std::vector<NamedTensor> entries) : _entries(std::move(entries)) {}

  static GradientSet zeros_like(const ParamSet &params);

  std::size_t size() const noexcept { return _entries.size(); }
  NamedTensor &operator[](std::size_t i) { return _entries[i]; }
  const NamedTensor &operator[](std::size_t i) const { return _entries[i]; }

  const Tensor *find(std::string_view name) const noexcept;
  Tensor *find(std::string_view name) noexcept;
  const Tensor &at(std::string_view name) const;

  auto begin() noexcept { return _entries.begin(); }
  auto end() noexcept { return _entries.end(); }
  auto begin() const noexcept { return _entries.begin(); }
  auto end() const noexcept { return _entries.end(); }

  // Global l2 norm over every entry.
  double norm() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const GradientSet &, const GradientSet &) = default;

private:
  std::vector<NamedTensor> _entries;
};

// Throws ShapeError naming the first entry whose key or shape disagrees with
// the trainable entries of `params`.
void check_matches(const ParamSet &params, const GradientSet &field, std::string_view what);

// params[k] + scale * direction[k] for every trainable entry in `direction`.
ParamSet displaced(const ParamSet &params, const GradientSet &direction, double scale);

} // namespace herolab

#endif // HERO_LAB_CORE_PARAMS_HPP
