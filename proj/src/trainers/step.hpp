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

#ifndef HERO_LAB_TRAINERS_STEP_HPP
#define HERO_LAB_TRAINERS_STEP_HPP

#include "core/autodiff.hpp"
#include "core/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace herolab::train
{

enum class Rule
{
  Sgd,
  FirstOrder,
  GradL1,
  Hero,
};

const char *to_string(Rule rule);
Rule rule_from_string(std::string_view s);

// How the layer perturbation z is scaled from the layer gradient.
//   LayerNorm:   z = ||W||_2 * g / ||g||_2        (||z||_2 == ||W||_2)
//   Elementwise: z = (W o W / ||W||_2) o g / ||g||_2
enum class PerturbationScaling
{
  LayerNorm,
  Elementwise,
};

const char *to_string(PerturbationScaling s);
PerturbationScaling perturbation_scaling_from_string(std::string_view s);

struct TrainerConfig
{
  Rule rule = Rule::Sgd;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double gamma = 0.1; // Hessian regularization strength
  double h = 0.5;     // perturbation step
  double beta = 0.0;  // gradient-l1 strength
  std::int64_t total_steps = 1;
  PerturbationScaling scaling = PerturbationScaling::LayerNorm;

  std::vector<std::string> violations() const;
  void validate() const;
};

struct TrainerState
{
  std::int64_t step = 0;
  GradientSet velocity;
  double lr = 0.0;

  static TrainerState initial(const ParamSet &params, const TrainerConfig &cfg);
};

// eta_0 * (1 + cos(pi t / T)) / 2
double cosine_lr(std::int64_t t, std::int64_t total, double lr0);

GradientSet layer_perturbation(const ParamSet &params, const GradientSet &grads,
                               PerturbationScaling scaling = PerturbationScaling::LayerNorm);

// Loss closures over one batch. `clean` is evaluated once per step at the
// current weights and may record side outputs (batch-norm moments, logits);
// `probe` evaluates the same function at displaced weights without side effects.
struct StepObjective
{
  ad::LossFn clean;
  ad::LossFn probe;

  static StepObjective of(ad::LossFn fn) { return {fn, fn}; }
};

struct LayerStat
{
  std::string name;
  double z_norm = 0.0;
  double regularizer = 0.0; // this layer's share of G
};

struct StepMetrics
{
  double loss = 0.0;
  double grad_norm = 0.0;
  bool has_regularizer = false;
  double regularizer = 0.0; // G = sum_i ||grad_i L(W*) - g_i||^2
  std::vector<LayerStat> layers;
  double lr = 0.0;
  ad::PassCounts passes;
  GradientSet direction; // composite gradient fed to the momentum update
  GradientSet regularizer_grad; // grad G at the perturbed point (hero with gamma > 0)
};

StepMetrics sgd_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj);
StepMetrics first_order_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state,
                             const StepObjective &obj);
StepMetrics grad_l1_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj);
StepMetrics hero_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj);

// Dispatches on cfg.rule.
StepMetrics apply_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj);

} // namespace herolab::train

#endif // HERO_LAB_TRAINERS_STEP_HPP
