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

#include "core/params.hpp"

#include "core/error.hpp"

#include <cmath>

namespace herolab
{

const char *to_string(ParamKind kind)
{
  switch (kind)
  {
    case ParamKind::Weight:
      return "weight";
    case ParamKind::Bias:
      return "bias";
    case ParamKind::BnScale:
      return "bn_scale";
    case ParamKind::BnShift:
      return "bn_shift";
  }
  return "?";
}

ParamKind param_kind_from_string(std::string_view s)
{
  if (s == "weight")
    return ParamKind::Weight;
  if (s == "bias")
    return ParamKind::Bias;
  if (s == "bn_scale")
    return ParamKind::BnScale;
  if (s == "bn_shift")
    return ParamKind::BnShift;
  throw Error(ErrorCode::Format, "unknown parameter kind '" + std::string(s) + "'");
}

void ParamSet::add(std::string name, Tensor tensor, ParamKind kind, bool trainable)
{
  if (find(name))
    throw Error(ErrorCode::InvalidArgument, "duplicate parameter name '" + name + "'");
  const bool perturbable = trainable && kind == ParamKind::Weight;
  _entries.push_back(ParamEntry{std::move(name), std::move(tensor), kind, trainable, perturbable});
}

const ParamEntry *ParamSet::find(std::string_view name) const noexcept
{
  for (const auto &e : _entries)
    if (e.name == name)
      return &e;
  return nullptr;
}

ParamEntry *ParamSet::find(std::string_view name) noexcept
{
  for (auto &e : _entries)
    if (e.name == name)
      return &e;
  return nullptr;
}

const Tensor &ParamSet::tensor(std::string_view name) const
{
  if (auto *e = find(name))
    return e->tensor;
  throw Error(ErrorCode::InvalidArgument, "no parameter named '" + std::string(name) + "'");
}

std::size_t ParamSet::element_count() const noexcept
{
  std::size_t n = 0;
  for (const auto &e : _entries)
    n += e.tensor.size();
  return n;
}

bool operator==(const ParamEntry &a, const ParamEntry &b)
{
  return a.name == b.name && a.kind == b.kind && a.trainable == b.trainable && a.perturbable == b.perturbable &&
         a.tensor == b.tensor;
}

bool operator==(const ParamSet &a, const ParamSet &b) { return a._entries == b._entries; }

GradientSet GradientSet::zeros_like(const ParamSet &params)
{
  std::vector<NamedTensor> entries;
  for (const auto &e : params)
    if (e.trainable)
      entries.push_back({e.name, Tensor::zeros_like(e.tensor)});
  return GradientSet(std::move(entries));
}

const Tensor *GradientSet::find(std::string_view name) const noexcept
{
  for (const auto &e : _entries)
    if (e.name == name)
      return &e.tensor;
  return nullptr;
}

Tensor *GradientSet::find(std::string_view name) noexcept
{
  for (auto &e : _entries)
    if (e.name == name)
      return &e.tensor;
  return nullptr;
}

const Tensor &GradientSet::at(std::string_view name) const
{
  if (auto *t = find(name))
    return *t;
  throw Error(ErrorCode::InvalidArgument, "no gradient entry named '" + std::string(name) + "'");
}

double GradientSet::norm() const noexcept
{
  double s = 0.0;
  for (const auto &e : _entries)
    s += dot(e.tensor.values(), e.tensor.values());
  return std::sqrt(s);
}

bool GradientSet::all_finite() const noexcept
{
  for (const auto &e : _entries)
    if (!e.tensor.all_finite())
      return false;
  return true;
}

void check_matches(const ParamSet &params, const GradientSet &field, std::string_view what)
{
  std::size_t k = 0;
  for (const auto &e : params)
  {
    if (!e.trainable)
      continue;
    if (k >= field.size() || field[k].name != e.name)
      throw ShapeError(e.name, std::string(what) + " has no matching entry");
    if (field[k].tensor.shape() != e.tensor.shape())
      throw ShapeError(e.name, std::string(what) + " shape " + shape_str(field[k].tensor.shape()) +
                                 " != parameter shape " + shape_str(e.tensor.shape()));
    ++k;
  }
  if (k != field.size())
    throw ShapeError(field[k].name, std::string(what) + " entry is not a trainable parameter");
}

ParamSet displaced(const ParamSet &params, const GradientSet &direction, double scale)
{
  ParamSet out = params;
  for (const auto &d : direction)
  {
    auto *e = out.find(d.name);
    if (!e || e->tensor.shape() != d.tensor.shape())
      throw ShapeError(d.name, "displacement does not match parameters");
    axpy(scale, d.tensor.values(), e->tensor.values());
  }
  return out;
}

} // namespace herolab
