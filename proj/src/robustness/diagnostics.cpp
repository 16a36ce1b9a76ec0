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

#include "robustness/diagnostics.hpp"

#include "core/error.hpp"
#include "core/parallel.hpp"

#include <cmath>

namespace herolab::lab
{

double curvature_along(const ad::LossFn &loss, const ParamSet &params, const GradientSet &z, double h)
{
  const auto hz = ad::hvp_fd(loss, params, z, h);
  double s = 0.0;
  std::size_t k = 0;
  for (const auto &e : params)
  {
    if (!e.trainable)
      continue;
    if (e.perturbable)
      for (double v : hz[k].tensor.values())
        s += v * v;
    ++k;
  }
  return std::sqrt(s);
}

double hessian_norm_metric(const std::vector<ad::LossFn> &batch_losses, const ParamSet &params, double h,
                           train::PerturbationScaling scaling)
{
  if (!(h > 0.0))
    throw Error(ErrorCode::InvalidArgument, "hessian_norm_metric: h must be positive");
  if (batch_losses.empty())
    return 0.0;
  double total = 0.0;
  for (const auto &loss : batch_losses)
  {
    const auto clean = ad::value_and_grad(loss, params);
    const auto z = train::layer_perturbation(params, clean.grad, scaling);
    const auto hz = ad::hvp_fd(loss, params, clean.grad, z, h);
    double s = 0.0;
    std::size_t k = 0;
    for (const auto &e : params)
    {
      if (!e.trainable)
        continue;
      if (e.perturbable)
        for (double v : hz[k].tensor.values())
          s += v * v;
      ++k;
    }
    total += std::sqrt(s);
  }
  return total / static_cast<double>(batch_losses.size());
}

double hessian_norm_metric(const models::ModelSpec &spec, const ParamSet &params, const models::BufferSet &buffers,
                           const data::LabeledDataset &ds, const HessianMetricOptions &options)
{
  std::vector<ad::LossFn> losses;
  for (auto &b : data::sequential_batches(ds, options.batch_size))
    losses.push_back(models::classification_loss(spec, std::move(b), models::Mode::Eval, &buffers));
  return hessian_norm_metric(losses, params, options.h, options.scaling);
}

GradientSet filter_normalized_direction(const ParamSet &params, Rng &rng)
{
  auto d = GradientSet::zeros_like(params);
  std::size_t k = 0;
  for (const auto &e : params)
  {
    if (!e.trainable)
      continue;
    auto out = d[k++].tensor.values();
    if (!e.perturbable)
      continue;
    for (auto &v : out)
      v = rng.normal();
    const double dn = l2_norm(out), wn = l2_norm(e.tensor.values());
    for (auto &v : out)
      v = dn > 0.0 ? v * (wn / dn) : 0.0;
  }
  return d;
}

ContourGrid loss_contour(const std::function<double(const ParamSet &)> &loss, const ParamSet &params,
                         double half_width, std::size_t steps, std::uint64_t seed)
{
  if (steps == 0 || steps % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "contour steps must be odd, got " + std::to_string(steps));
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw Error(ErrorCode::InvalidArgument, "contour half_width must be positive");

  Rng rng(derive_seed(seed, "contour"));
  const auto d1 = filter_normalized_direction(params, rng);
  const auto d2 = filter_normalized_direction(params, rng);

  ContourGrid grid;
  grid.coords.resize(steps);
  const auto mid = static_cast<std::int64_t>(steps / 2);
  for (std::size_t i = 0; i < steps; ++i)
    grid.coords[i] = steps == 1 ? 0.0 : half_width * static_cast<double>(static_cast<std::int64_t>(i) - mid) /
                                          static_cast<double>(mid);
  grid.loss.assign(steps * steps, 0.0);

  parallel_for(steps * steps, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t cell = b; cell < e; ++cell)
    {
      const std::size_t i = cell / steps, j = cell % steps;
      if (grid.coords[i] == 0.0 && grid.coords[j] == 0.0)
      {
        grid.loss[cell] = loss(params);
        continue;
      }
      auto p = displaced(params, d1, grid.coords[i]);
      p = displaced(p, d2, grid.coords[j]);
      grid.loss[cell] = loss(p);
    }
  });
  return grid;
}

ContourGrid loss_contour(const models::ModelSpec &spec, const ParamSet &params, const models::BufferSet &buffers,
                         const data::LabeledDataset &ds, double half_width, std::size_t steps, std::uint64_t seed)
{
  return loss_contour([&](const ParamSet &p) { return models::evaluate(spec, p, buffers, ds).loss; }, params,
                      half_width, steps, seed);
}

} // namespace herolab::lab
