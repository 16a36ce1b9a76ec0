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

#ifndef HERO_LAB_TRAINERS_TRAIN_HPP
#define HERO_LAB_TRAINERS_TRAIN_HPP

#include "data/dataset.hpp"
#include "models/model.hpp"
#include "robustness/diagnostics.hpp"
#include "trainers/step.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace herolab::train
{

struct LayerSeries
{
  std::string name;
  double z_norm = 0.0;      // epoch mean of ||z_i||_2
  double regularizer = 0.0; // epoch mean of this layer's share of G
};

struct EpochMetrics
{
  std::size_t epoch = 0; // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double eval_loss = 0.0;
  double eval_acc = 0.0;
  std::optional<double> hessian_norm;
  std::optional<double> regularizer; // epoch mean of G
  std::vector<LayerSeries> layers;   // empty for rules without a perturbation
  double lr = 0.0;                   // learning rate of the epoch's last step
  double wall_ms = 0.0;
};

struct TrainOptions
{
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  bool flip = false;
  // Hessian-norm metric every `hessian_interval` epochs and at the last one; 0 disables it.
  std::size_t hessian_interval = 0;
  lab::HessianMetricOptions hessian;
  std::function<void(const EpochMetrics &)> on_epoch;
};

struct TrainResult
{
  ParamSet params;
  models::BufferSet buffers;
  TrainerState state;
  std::vector<EpochMetrics> epochs;
};

// Steps per epoch after dropping a trailing single-sample batch under batch norm.
std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size, bool batch_norm);

// Trains from build(spec, sub-seed "init"); cfg.total_steps is replaced by
// epochs * steps_per_epoch. Deterministic in (spec, data, cfg, options, seed).
TrainResult train(const models::ModelSpec &spec, const data::LabeledDataset &train_set,
                  const data::LabeledDataset &eval_set, TrainerConfig cfg, const TrainOptions &options,
                  std::uint64_t seed);

} // namespace herolab::train

#endif // HERO_LAB_TRAINERS_TRAIN_HPP
