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

#include "quant/quantizer.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>

namespace herolab::quant
{

const char *to_string(RangePolicy p)
{
  return p == RangePolicy::MinMaxAsymmetric ? "minmax_asymmetric" : "absmax_symmetric";
}

RangePolicy range_policy_from_string(std::string_view s)
{
  if (s == "minmax_asymmetric")
    return RangePolicy::MinMaxAsymmetric;
  if (s == "absmax_symmetric")
    return RangePolicy::AbsMaxSymmetric;
  throw Error(ErrorCode::Config, "unknown range policy '" + std::string(s) + "'");
}

void QuantSpec::validate() const
{
  if (bits < min_bits || bits > max_bits)
    throw ConfigError({"quant.bits: " + std::to_string(bits) + " outside [2, 16]"});
}

QuantGrid grid_for(std::span<const double> values, const QuantSpec &spec)
{
  spec.validate();
  QuantGrid g;
  if (values.empty())
    return g;
  if (spec.range == RangePolicy::MinMaxAsymmetric)
  {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    g.offset = g.bottom = *lo;
    g.top = *hi;
    g.k_max = std::ldexp(1.0, static_cast<int>(spec.bits)) - 1.0;
    g.delta = (*hi - *lo) / g.k_max;
  }
  else
  {
    double a = 0.0;
    for (double v : values)
      a = std::max(a, std::abs(v));
    g.k_max = std::ldexp(1.0, static_cast<int>(spec.bits) - 1) - 1.0;
    g.k_min = -g.k_max;
    g.top = a;
    g.bottom = -a;
    g.delta = a / g.k_max;
  }
  return g;
}

namespace
{

double nearest(const QuantGrid &g, double x)
{
  double k = std::clamp(std::nearbyint((x - g.offset) / g.delta), g.k_min, g.k_max);
  // the division can land one level off near midpoints; settle on exact distances
  double best = k, best_d = std::abs(x - g.level(k));
  for (double c : {k - 1.0, k + 1.0})
  {
    if (c < g.k_min || c > g.k_max)
      continue;
    const double d = std::abs(x - g.level(c));
    if (d < best_d || (d == best_d && std::fmod(c, 2.0) == 0.0))
    {
      best = c;
      best_d = d;
    }
  }
  return g.level(best);
}

} // namespace

Tensor quantize_tensor(const Tensor &t, const QuantSpec &spec)
{
  const auto g = grid_for(t.values(), spec);
  Tensor out = t;
  if (!(g.delta > 0.0))
    return out;
  for (auto &v : out.values())
  {
    if (!std::isfinite(v))
      throw Error(ErrorCode::Numerical, "cannot quantize a non-finite weight");
    v = nearest(g, v);
  }
  return out;
}

ParamSet quantize_params(const ParamSet &params, const QuantSpec &spec)
{
  spec.validate();
  ParamSet out = params;
  for (auto &e : out)
    if (e.kind == ParamKind::Weight)
      e.tensor = quantize_tensor(e.tensor, spec);
  return out;
}

std::vector<SweepRow> sweep(const models::ModelSpec &spec, const ParamSet &params, const models::BufferSet &buffers,
                            const data::LabeledDataset &ds, std::span<const unsigned> bits, RangePolicy range)
{
  for (unsigned b : bits)
    QuantSpec{b, range}.validate();
  std::vector<SweepRow> rows;
  const auto full = models::evaluate(spec, params, buffers, ds);
  rows.push_back({0, full.loss, full.accuracy});
  for (unsigned b : bits)
  {
    const auto ev = models::evaluate(spec, quantize_params(params, {b, range}), buffers, ds);
    rows.push_back({b, ev.loss, ev.accuracy});
  }
  return rows;
}

} // namespace herolab::quant
