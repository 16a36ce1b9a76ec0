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

#include "data/dataset.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace herolab::data
{

Shape LabeledDataset::sample_shape() const
{
  const auto &s = inputs.shape();
  if (s.empty())
    return {};
  return Shape(s.begin() + 1, s.end());
}

std::size_t LabeledDataset::sample_size() const { return shape_size(sample_shape()); }

void LabeledDataset::validate() const
{
  if (labels.empty())
    throw Error(ErrorCode::InvalidArgument, "dataset is empty");
  if (inputs.rank() < 2 || inputs.dim(0) != labels.size())
    throw ShapeError("dataset", "inputs " + shape_str(inputs.shape()) + " vs " + std::to_string(labels.size()) +
                                  " labels");
  if (classes < 2)
    throw Error(ErrorCode::InvalidArgument, "dataset needs at least 2 classes");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(y) + " outside [0, " +
                                                std::to_string(classes) + ")");
}

LabeledBatch LabeledDataset::gather(std::span<const std::size_t> indices) const
{
  const std::size_t d = sample_size();
  Shape shape = inputs.shape();
  shape[0] = indices.size();
  std::vector<double> values(indices.size() * d);
  std::vector<int> y(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
  {
    const auto src = inputs.values().subspan(indices[i] * d, d);
    std::copy(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>(i * d));
    y[i] = labels.at(indices[i]);
  }
  return {Tensor(std::move(shape), std::move(values)), std::move(y)};
}

LabeledBatch LabeledDataset::slice(std::size_t begin, std::size_t end) const
{
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return gather(idx);
}

const char *to_string(SyntheticKind kind)
{
  switch (kind)
  {
    case SyntheticKind::Gaussians:
      return "gaussians";
    case SyntheticKind::Spirals:
      return "spirals";
    case SyntheticKind::Glyphs:
      return "glyphs";
  }
  return "?";
}

SyntheticKind synthetic_kind_from_string(std::string_view s)
{
  if (s == "gaussians")
    return SyntheticKind::Gaussians;
  if (s == "spirals")
    return SyntheticKind::Spirals;
  if (s == "glyphs")
    return SyntheticKind::Glyphs;
  throw Error(ErrorCode::InvalidArgument, "unknown synthetic kind '" + std::string(s) + "'");
}

LabeledDataset inject_symmetric_noise(const LabeledDataset &ds, const NoiseSpec &spec,
                                      std::vector<std::size_t> *selected)
{
  if (!(spec.ratio >= 0.0 && spec.ratio <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "noise ratio must lie in [0, 1]");
  LabeledDataset out = ds;
  const std::size_t n = ds.size();
  const auto picks = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(n)));
  if (selected)
    selected->clear();
  if (picks == 0)
    return out;

  Rng rng(spec.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // partial Fisher-Yates: the first `picks` slots are a uniform sample without replacement
  for (std::size_t i = 0; i < picks; ++i)
  {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < picks; ++i)
    out.labels[order[i]] = static_cast<int>(rng.below(ds.classes));
  if (selected)
    selected->assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(picks));
  return out;
}

void flip_horizontal(std::span<double> sample, const Shape &sample_shape)
{
  if (sample_shape.empty())
    return;
  const std::size_t w = sample_shape.back();
  for (std::size_t row = 0; row + w <= sample.size(); row += w)
    std::reverse(sample.begin() + static_cast<std::ptrdiff_t>(row),
                 sample.begin() + static_cast<std::ptrdiff_t>(row + w));
}

std::vector<LabeledBatch> batches(const LabeledDataset &ds, std::size_t batch_size, std::uint64_t epoch_seed,
                                  bool flip_augment)
{
  if (batch_size == 0)
    throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(epoch_seed);
  for (std::size_t i = n; i > 1; --i)
  {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }

  const Shape sample_shape = ds.sample_shape();
  const bool can_flip = flip_augment && sample_shape.size() >= 2;
  Rng flip_rng(derive_seed(epoch_seed, "flip"));
  const std::size_t d = ds.sample_size();

  std::vector<LabeledBatch> out;
  for (std::size_t b = 0; b < n; b += batch_size)
  {
    const std::size_t e = std::min(n, b + batch_size);
    auto batch = ds.gather(std::span<const std::size_t>(order).subspan(b, e - b));
    if (can_flip)
      for (std::size_t i = 0; i < batch.size(); ++i)
        if (flip_rng.uniform() < 0.5)
          flip_horizontal(batch.inputs.values().subspan(i * d, d), sample_shape);
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<LabeledBatch> sequential_batches(const LabeledDataset &ds, std::size_t batch_size)
{
  if (batch_size == 0)
    throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  std::vector<LabeledBatch> out;
  for (std::size_t b = 0; b < ds.size(); b += batch_size)
    out.push_back(ds.slice(b, std::min(ds.size(), b + batch_size)));
  return out;
}

} // namespace herolab::data
