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

#include "trainers/train.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <chrono>

namespace herolab::train
{

std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size, bool batch_norm)
{
  if (batch_size == 0)
    throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  std::size_t n = (samples + batch_size - 1) / batch_size;
  if (batch_norm && samples % batch_size == 1)
    --n;
  return n;
}

TrainResult train(const models::ModelSpec &spec, const data::LabeledDataset &train_set,
                  const data::LabeledDataset &eval_set, TrainerConfig cfg, const TrainOptions &options,
                  std::uint64_t seed)
{
  spec.validate();
  train_set.validate();
  eval_set.validate();
  if (options.epochs == 0)
    throw ConfigError({"train.epochs: must be >= 1"});
  const std::size_t per_epoch = steps_per_epoch(train_set.size(), options.batch_size, spec.batch_norm);
  if (per_epoch == 0)
    throw ConfigError({"train.batch_size: no usable batch for " + std::to_string(train_set.size()) + " samples"});
  cfg.total_steps = static_cast<std::int64_t>(options.epochs * per_epoch);
  cfg.validate();

  TrainResult out;
  out.params = models::build(spec, derive_seed(seed, "init"));
  out.buffers = models::initial_buffers(spec);
  out.state = TrainerState::initial(out.params, cfg);

  const auto shuffle_seed = derive_seed(seed, "shuffle");
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch)
  {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics em;
    em.epoch = epoch;

    double loss_sum = 0.0, correct = 0.0, seen = 0.0, g_sum = 0.0;
    std::size_t steps = 0;
    std::vector<LayerSeries> layer_sums;
    auto epoch_batches = data::batches(train_set, options.batch_size,
                                       derive_seed(shuffle_seed, "epoch-" + std::to_string(epoch)), options.flip);
    for (auto &batch : epoch_batches)
    {
      if (spec.batch_norm && batch.size() < 2)
        continue;
      const double n = static_cast<double>(batch.size());
      const auto labels = batch.labels;
      models::ForwardTrace trace;
      StepObjective obj{models::classification_loss(spec, batch, models::Mode::Train, nullptr, &trace),
                        models::classification_loss(spec, std::move(batch), models::Mode::Train, nullptr)};
      const auto m = apply_step(cfg, out.params, out.state, obj);
      models::update_running_stats(out.buffers, trace.moments);

      loss_sum += m.loss * n;
      correct += static_cast<double>(models::count_correct(trace.logits, labels));
      seen += n;
      em.lr = m.lr;
      if (m.has_regularizer)
      {
        g_sum += m.regularizer;
        if (layer_sums.empty())
          for (const auto &l : m.layers)
            layer_sums.push_back({l.name, 0.0, 0.0});
        for (std::size_t i = 0; i < m.layers.size(); ++i)
        {
          layer_sums[i].z_norm += m.layers[i].z_norm;
          layer_sums[i].regularizer += m.layers[i].regularizer;
        }
      }
      ++steps;
    }

    em.train_loss = loss_sum / seen;
    em.train_acc = correct / seen;
    if (!layer_sums.empty())
    {
      em.regularizer = g_sum / static_cast<double>(steps);
      for (auto &l : layer_sums)
      {
        l.z_norm /= static_cast<double>(steps);
        l.regularizer /= static_cast<double>(steps);
      }
      em.layers = std::move(layer_sums);
    }
    const auto ev = models::evaluate(spec, out.params, out.buffers, eval_set);
    em.eval_loss = ev.loss;
    em.eval_acc = ev.accuracy;
    if (options.hessian_interval > 0 && (epoch % options.hessian_interval == 0 || epoch == options.epochs))
      em.hessian_norm = lab::hessian_norm_metric(spec, out.params, out.buffers, train_set, options.hessian);
    em.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (options.on_epoch)
      options.on_epoch(em);
    out.epochs.push_back(std::move(em));
  }
  return out;
}

} // namespace herolab::train
