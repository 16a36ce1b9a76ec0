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

#ifndef HERO_LAB_MODELS_MODEL_HPP
#define HERO_LAB_MODELS_MODEL_HPP

#include "core/autodiff.hpp"
#include "core/params.hpp"
#include "data/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace herolab::models
{

enum class Arch
{
  Mlp,
  SmallConv,
};

const char *to_string(Arch arch);
Arch arch_from_string(std::string_view s);

struct ModelSpec
{
  Arch arch = Arch::Mlp;
  // mlp: layer widths, input first and class count last
  std::vector<std::size_t> widths{784, 64, 10};
  // smallconv: output channels per conv layer (each: conv, [bn], relu, 2x2 avg pool)
  std::vector<std::size_t> channels{8, 16};
  std::size_t kernel = 3;
  bool batch_norm = false;
  Shape input_shape{1, 28, 28};
  std::size_t classes = 10;

  // Every problem found, empty when valid.
  std::vector<std::string> violations() const;
  void validate() const;
};

enum class Mode
{
  Train,
  Eval,
};

inline constexpr double bn_eps = 1e-5;
inline constexpr double bn_momentum = 0.9;

// Running batch-norm statistics, one entry per normalization layer.
struct RunningStats
{
  std::string name;
  Tensor mean;
  Tensor var;

  friend bool operator==(const RunningStats &, const RunningStats &) = default;
};
using BufferSet = std::vector<RunningStats>;

struct ExpectedParam
{
  std::string name;
  Shape shape;
  ParamKind kind;
};

std::vector<ExpectedParam> expected_params(const ModelSpec &spec);

// Kaiming-uniform weights keyed on seed, zero biases, unit bn scale, zero bn shift.
ParamSet build(const ModelSpec &spec, std::uint64_t seed);
BufferSet initial_buffers(const ModelSpec &spec);

// Throws ShapeError naming the first parameter that is missing or misshapen.
void check_params(const ModelSpec &spec, const ParamSet &params);

// Captures side outputs of a recorded forward pass.
struct ForwardTrace
{
  Tensor logits;
  std::vector<ad::BatchMoments> moments;
};

// Records logits (B, K). Train mode normalizes with batch moments; Eval mode
// uses `buffers`.
ad::Var record_logits(ad::Tape &tape, const ModelSpec &spec, const ad::ParamLeaves &params, const Tensor &inputs,
                      Mode mode, const BufferSet *buffers, std::vector<ad::BatchMoments> *moments = nullptr);

// Mean cross-entropy of the model on `batch`. The batch is copied into the closure.
ad::LossFn classification_loss(const ModelSpec &spec, data::LabeledBatch batch, Mode mode, const BufferSet *buffers,
                               ForwardTrace *trace = nullptr);

Tensor predict(const ModelSpec &spec, const ParamSet &params, const BufferSet &buffers, const Tensor &inputs,
               Mode mode = Mode::Eval);

// Exponential moving average with bn_momentum; variance uses the unbiased batch estimate.
void update_running_stats(BufferSet &buffers, const std::vector<ad::BatchMoments> &moments);

struct Evaluation
{
  double loss = 0.0;
  double accuracy = 0.0;
};

std::size_t count_correct(const Tensor &logits, std::span<const int> labels);

// Eval-mode loss and accuracy over the whole dataset in fixed-size batches.
Evaluation evaluate(const ModelSpec &spec, const ParamSet &params, const BufferSet &buffers,
                    const data::LabeledDataset &ds, std::size_t batch_size = 500);

} // namespace herolab::models

#endif // HERO_LAB_MODELS_MODEL_HPP
