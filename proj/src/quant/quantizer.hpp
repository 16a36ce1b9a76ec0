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

#ifndef HERO_LAB_QUANT_QUANTIZER_HPP
#define HERO_LAB_QUANT_QUANTIZER_HPP

#include "core/params.hpp"
#include "data/dataset.hpp"
#include "models/model.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace herolab::quant
{

enum class RangePolicy
{
  MinMaxAsymmetric, // levels min + k delta, delta = (max - min) / (2^n - 1)
  AbsMaxSymmetric,  // levels k delta, |k| <= 2^(n-1) - 1, delta = max|x| / (2^(n-1) - 1)
};

const char *to_string(RangePolicy p);
RangePolicy range_policy_from_string(std::string_view s);

inline constexpr unsigned min_bits = 2;
inline constexpr unsigned max_bits = 16;

struct QuantSpec
{
  unsigned bits = 8;
  RangePolicy range = RangePolicy::MinMaxAsymmetric;

  void validate() const;
};

// Grid of one tensor: level k sits at offset + k * delta, k in [k_min, k_max].
struct QuantGrid
{
  double offset = 0.0;
  double delta = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;
  double bottom = 0.0; // exact values of the end levels
  double top = 0.0;

  double level(double k) const { return k == k_max ? top : k == k_min ? bottom : offset + k * delta; }
};

QuantGrid grid_for(std::span<const double> values, const QuantSpec &spec);

// Nearest level, ties to even k. A zero-width grid returns the values unchanged.
Tensor quantize_tensor(const Tensor &t, const QuantSpec &spec);

// Quantizes every weight-kind tensor into a new set; biases and batch-norm
// parameters are copied as is.
ParamSet quantize_params(const ParamSet &params, const QuantSpec &spec);

struct SweepRow
{
  unsigned bits = 0; // 0 is full precision
  double eval_loss = 0.0;
  double eval_acc = 0.0;
};

// Full-precision row first, then one row per entry of `bits` in the given order.
std::vector<SweepRow> sweep(const models::ModelSpec &spec, const ParamSet &params, const models::BufferSet &buffers,
                            const data::LabeledDataset &ds, std::span<const unsigned> bits,
                            RangePolicy range = RangePolicy::MinMaxAsymmetric);

} // namespace herolab::quant

#endif // HERO_LAB_QUANT_QUANTIZER_HPP
