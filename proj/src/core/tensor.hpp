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

#ifndef HERO_LAB_CORE_TENSOR_HPP
#define HERO_LAB_CORE_TENSOR_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace herolab
{

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);
std::string shape_str(const Shape &shape);

/// Dense row-major array of doubles. A rank-0 tensor holds one value.
class Tensor
{
public:
  Tensor() : _values(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }
  static Tensor vector(std::vector<double> values);
  static Tensor zeros_like(const Tensor &other) { return Tensor(other._shape, 0.0); }

  const Shape &shape() const noexcept { return _shape; }
  std::size_t rank() const noexcept { return _shape.size(); }
  std::size_t size() const noexcept { return _values.size(); }
  std::size_t dim(std::size_t axis) const { return _shape.at(axis); }

  std::span<double> values() noexcept { return _values; }
  std::span<const double> values() const noexcept { return _values; }
  double *data() noexcept { return _values.data(); }
  const double *data() const noexcept { return _values.data(); }

  double &operator[](std::size_t i) { return _values[i]; }
  double operator[](std::size_t i) const { return _values[i]; }

  // Value of a single-element tensor; throws otherwise.
  double item() const;

  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor &a, const Tensor &b) = default;

private:
  Shape _shape;
  std::vector<double> _values;
};

bool same_shape(const Tensor &a, const Tensor &b) noexcept;

double sum(std::span<const double> x) noexcept;
double dot(std::span<const double> x, std::span<const double> y) noexcept;
double l2_norm(std::span<const double> x) noexcept;
double l1_norm(std::span<const double> x) noexcept;
double linf_norm(std::span<const double> x) noexcept;

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y) noexcept;

// Binary layout: u64 rank, u64 dims[rank], f64 values[size], all little-endian.
void write_tensor(std::ostream &out, const Tensor &t);
Tensor read_tensor(std::istream &in);

} // namespace herolab

#endif // HERO_LAB_CORE_TENSOR_HPP
