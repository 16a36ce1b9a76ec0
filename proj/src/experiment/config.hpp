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

#ifndef HERO_LAB_EXPERIMENT_CONFIG_HPP
#define HERO_LAB_EXPERIMENT_CONFIG_HPP

#include "data/dataset.hpp"
#include "models/model.hpp"
#include "quant/quantizer.hpp"
#include "trainers/step.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace herolab::experiment
{

inline constexpr int schema_version = 1;

enum class DataSource
{
  Synthetic,
  Idx,
};

struct SyntheticData
{
  data::SyntheticKind kind = data::SyntheticKind::Glyphs;
  std::size_t train_count = 4000;
  std::size_t test_count = 2000;
  std::size_t classes = 10;
  std::size_t dim = 2;
  double separation = 7.0;
};

struct IdxData
{
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  data::Normalization normalization{0.1307, 0.3081};
};

struct DataConfig
{
  DataSource source = DataSource::Synthetic;
  SyntheticData synthetic;
  IdxData idx;
};

struct TrainingConfig
{
  train::TrainerConfig trainer;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  bool flip = false;
};

struct ContourConfig
{
  double half_width = 1.0;
  std::size_t steps = 0; // 0: no contour after training
};

struct DiagnosticsConfig
{
  std::size_t hessian_interval = 0; // 0: never
  double hessian_h = 1e-3;
  std::size_t hessian_batch = 256;
  ContourConfig contour;
};

struct QuantConfig
{
  std::vector<unsigned> bits{2, 3, 4, 6, 8};
  quant::RangePolicy range = quant::RangePolicy::MinMaxAsymmetric;
};

struct ExperimentConfig
{
  std::uint64_t seed = 0;
  models::ModelSpec model;
  DataConfig data;
  double noise_ratio = 0.0;
  TrainingConfig training;
  QuantConfig quant;
  DiagnosticsConfig diagnostics;
  std::filesystem::path output_dir = "runs/default";

  std::vector<std::string> violations() const;
  void validate() const; // ConfigError listing every violation
};

// Strict parse: unknown keys, wrong types and bad values are all collected and
// reported together. Relative paths resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
ExperimentConfig parse_config_text(const std::string &text, const std::filesystem::path &base_dir = {});
ExperimentConfig load_config(const std::filesystem::path &path);

// Every field materialized; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig &c);

bool operator==(const ExperimentConfig &a, const ExperimentConfig &b);

// Named sub-seeds of the config seed.
std::uint64_t sub_seed(const ExperimentConfig &c, std::string_view name);

struct Datasets
{
  data::LabeledDataset train; // after label noise
  data::LabeledDataset test;
};

Datasets load_datasets(const ExperimentConfig &c);

} // namespace herolab::experiment

#endif // HERO_LAB_EXPERIMENT_CONFIG_HPP
