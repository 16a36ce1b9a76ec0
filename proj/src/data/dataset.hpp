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

#ifndef HERO_LAB_DATA_DATASET_HPP
#define HERO_LAB_DATA_DATASET_HPP

#include "core/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace herolab::data
{

struct LabeledBatch
{
  Tensor inputs; // (B, sample shape...)
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

struct LabeledDataset
{
  Tensor inputs; // (N, sample shape...)
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const;
  std::size_t sample_size() const;

  // Throws when N is zero, inputs and labels disagree, or a label is out of range.
  void validate() const;

  LabeledBatch gather(std::span<const std::size_t> indices) const;
  LabeledBatch slice(std::size_t begin, std::size_t end) const;
  LabeledBatch all() const { return slice(0, size()); }
};

// ---- IDX ----

struct Normalization
{
  double mean = 0.0;
  double std = 1.0;
};

inline constexpr std::uint32_t idx_images_magic = 0x00000803;
inline constexpr std::uint32_t idx_labels_magic = 0x00000801;

// Pixels are scaled to [0,1] and then normalized. Samples have shape
// (1, rows, cols). `classes` = 0 infers max(label) + 1 (at least 2).
LabeledDataset load_idx(const std::filesystem::path &images, const std::filesystem::path &labels,
                        Normalization norm = {}, std::size_t classes = 0);

void write_idx_images(const std::filesystem::path &path, std::span<const std::uint8_t> pixels, std::size_t count,
                      std::size_t rows, std::size_t cols);
void write_idx_labels(const std::filesystem::path &path, std::span<const int> labels);

// Writes a dataset whose samples are (rows, cols) or (1, rows, cols) images with
// values in [0,1]; pixel = round(255 * value).
void export_idx(const LabeledDataset &ds, const std::filesystem::path &images, const std::filesystem::path &labels);

// ---- synthetic ----

enum class SyntheticKind
{
  Gaussians,
  Spirals,
  Glyphs,
};

const char *to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(std::string_view s);

struct SyntheticSpec
{
  SyntheticKind kind = SyntheticKind::Gaussians;
  std::size_t count = 1000;
  std::size_t classes = 2;
  std::uint64_t seed = 0;
  // gaussians: feature dimension and distance between adjacent class means (unit noise)
  std::size_t dim = 2;
  double separation = 7.0;
  // glyphs: seed of the class prototypes shared by train and test draws
  std::uint64_t family_seed = 0;
};

// Sample i belongs to class i mod K, so class sizes differ by at most one.
LabeledDataset make_synthetic(const SyntheticSpec &spec);

// ---- label noise ----

struct NoiseSpec
{
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

// Picks round(ratio * N) distinct samples uniformly and redraws each label
// uniformly over all K classes (the original class included). The picked
// indices go to `selected` when given.
LabeledDataset inject_symmetric_noise(const LabeledDataset &ds, const NoiseSpec &spec,
                                      std::vector<std::size_t> *selected = nullptr);

// ---- batching ----

// Mirrors each sample along its last axis.
void flip_horizontal(std::span<double> sample, const Shape &sample_shape);

// Full shuffle keyed on epoch_seed; the last partial batch is kept.
std::vector<LabeledBatch> batches(const LabeledDataset &ds, std::size_t batch_size, std::uint64_t epoch_seed,
                                  bool flip_augment = false);

// In-order batches, no shuffling.
std::vector<LabeledBatch> sequential_batches(const LabeledDataset &ds, std::size_t batch_size);

} // namespace herolab::data

#endif // HERO_LAB_DATA_DATASET_HPP
