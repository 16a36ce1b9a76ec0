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

#include "core/tensor.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace herolab
{

std::size_t shape_size(const Shape &shape)
{
  std::size_t n = 1;
  for (auto d : shape)
    n *= d;
  return n;
}

std::string shape_str(const Shape &shape)
{
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i)
  {
    if (i)
      s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace
{

void check_dims(const Shape &shape)
{
  for (auto d : shape)
    if (d == 0)
      throw Error(ErrorCode::InvalidArgument, "tensor dimensions must be positive, got " + shape_str(shape));
}

} // namespace

Tensor::Tensor(Shape shape, double fill) : _shape(std::move(shape))
{
  check_dims(_shape);
  _values.assign(shape_size(_shape), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : _shape(std::move(shape)), _values(std::move(values))
{
  check_dims(_shape);
  if (shape_size(_shape) != _values.size())
    throw ShapeError("tensor", "shape " + shape_str(_shape) + " does not hold " + std::to_string(_values.size()) +
                                 " values");
}

Tensor Tensor::vector(std::vector<double> values)
{
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

double Tensor::item() const
{
  if (_values.size() != 1)
    throw ShapeError("tensor", "item() on tensor of shape " + shape_str(_shape));
  return _values[0];
}

Tensor Tensor::reshaped(Shape shape) const
{
  if (shape_size(shape) != _values.size())
    throw ShapeError("reshape", shape_str(_shape) + " -> " + shape_str(shape));
  return Tensor(std::move(shape), _values);
}

bool Tensor::all_finite() const noexcept
{
  return std::all_of(_values.begin(), _values.end(), [](double v) { return std::isfinite(v); });
}

bool same_shape(const Tensor &a, const Tensor &b) noexcept { return a.shape() == b.shape(); }

double sum(std::span<const double> x) noexcept
{
  double s = 0.0;
  for (double v : x)
    s += v;
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) noexcept
{
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += x[i] * y[i];
  return s;
}

double l2_norm(std::span<const double> x) noexcept { return std::sqrt(dot(x, x)); }

double l1_norm(std::span<const double> x) noexcept
{
  double s = 0.0;
  for (double v : x)
    s += std::abs(v);
  return s;
}

double linf_norm(std::span<const double> x) noexcept
{
  double m = 0.0;
  for (double v : x)
    m = std::max(m, std::abs(v));
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) noexcept
{
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += a * x[i];
}

namespace
{

static_assert(sizeof(double) == 8);

void put_u64(std::ostream &out, std::uint64_t v)
{
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i)
    buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char *>(buf), 8);
}

std::uint64_t get_u64(std::istream &in)
{
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char *>(buf), 8))
    throw Error(ErrorCode::Truncated, "tensor stream ended early");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

constexpr std::uint64_t max_rank = 16;

} // namespace

void write_tensor(std::ostream &out, const Tensor &t)
{
  put_u64(out, t.rank());
  for (auto d : t.shape())
    put_u64(out, d);
  for (double v : t.values())
    put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out)
    throw Error(ErrorCode::Io, "failed writing tensor");
}

Tensor read_tensor(std::istream &in)
{
  auto rank = get_u64(in);
  if (rank > max_rank)
    throw Error(ErrorCode::Format, "tensor rank " + std::to_string(rank) + " exceeds limit");
  Shape shape(rank);
  for (auto &d : shape)
  {
    d = get_u64(in);
    if (d == 0)
      throw Error(ErrorCode::Format, "tensor with zero dimension");
  }
  std::vector<double> values(shape_size(shape));
  for (auto &v : values)
    v = std::bit_cast<double>(get_u64(in));
  return Tensor(std::move(shape), std::move(values));
}

} // namespace herolab
