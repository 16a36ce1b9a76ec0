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

#ifndef HERO_LAB_ROBUSTNESS_DIAGNOSTICS_HPP
#define HERO_LAB_ROBUSTNESS_DIAGNOSTICS_HPP

#include "core/autodiff.hpp"
#include "core/params.hpp"
#include "core/random.hpp"
#include "models/model.hpp"
#include "trainers/step.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace herolab::lab
{

// ||H z||_2 over the perturbable entries, H z taken by finite differences with step h.
double curvature_along(const ad::LossFn &loss, const ParamSet &params, const GradientSet &z, double h);

// Mean over batches of ||H z||_2 where z comes from layer_perturbation of each
// batch's own gradient. Batches are reduced in the given order.
double hessian_norm_metric(const std::vector<ad::LossFn> &batch_losses, const ParamSet &params, double h,
                           train::PerturbationScaling scaling = train::PerturbationScaling::LayerNorm);

struct HessianMetricOptions
{
  double h = 1e-3;
  std::size_t batch_size = 256;
  train::PerturbationScaling scaling = train::PerturbationScaling::LayerNorm;
};

// Eval-mode model version over `ds` in sequential fixed-size batches.
double hessian_norm_metric(const models::ModelSpec &spec, const ParamSet &params, const models::BufferSet &buffers,
                           const data::LabeledDataset &ds, const HessianMetricOptions &options = {});

struct ContourGrid
{
  std::vector<double> coords; // a_i == b_i, ascending
  std::vector<double> loss;   // loss[i * steps + j] at (coords[i], coords[j])

  std::size_t steps() const noexcept { return coords.size(); }
  double at(std::size_t i, std::size_t j) const { return loss.at(i * coords.size() + j); }
};

// Random Gaussian direction over the perturbable entries, each entry rescaled
// to that entry's weight norm. Other entries are zero.
GradientSet filter_normalized_direction(const ParamSet &params, Rng &rng);

// Loss at params + a d1 + b d2 on a steps x steps grid over [-half_width, half_width].
// steps must be odd; the center cell is evaluated at params itself.
ContourGrid loss_contour(const std::function<double(const ParamSet &)> &loss, const ParamSet &params,
                         double half_width, std::size_t steps, std::uint64_t seed);

ContourGrid loss_contour(const models::ModelSpec &spec, const ParamSet &params, const models::BufferSet &buffers,
                         const data::LabeledDataset &ds, double half_width, std::size_t steps, std::uint64_t seed);

} // namespace herolab::lab

#endif // HERO_LAB_ROBUSTNESS_DIAGNOSTICS_HPP
