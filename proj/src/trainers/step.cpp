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

#include "trainers/step.hpp"

#include "core/error.hpp"

#include <cmath>
#include <numbers>

namespace herolab::train
{

const char *to_string(Rule rule)
{
  switch (rule)
  {
    case Rule::Sgd:
      return "sgd";
    case Rule::FirstOrder:
      return "first_order";
    case Rule::GradL1:
      return "grad_l1";
    case Rule::Hero:
      return "hero";
  }
  return "?";
}

Rule rule_from_string(std::string_view s)
{
  if (s == "sgd")
    return Rule::Sgd;
  if (s == "first_order")
    return Rule::FirstOrder;
  if (s == "grad_l1")
    return Rule::GradL1;
  if (s == "hero")
    return Rule::Hero;
  throw Error(ErrorCode::InvalidArgument, "unknown update rule '" + std::string(s) + "'");
}

const char *to_string(PerturbationScaling s)
{
  return s == PerturbationScaling::LayerNorm ? "layer_norm" : "elementwise";
}

PerturbationScaling perturbation_scaling_from_string(std::string_view s)
{
  if (s == "layer_norm")
    return PerturbationScaling::LayerNorm;
  if (s == "elementwise")
    return PerturbationScaling::Elementwise;
  throw Error(ErrorCode::InvalidArgument, "unknown perturbation scaling '" + std::string(s) + "'");
}

std::vector<std::string> TrainerConfig::violations() const
{
  std::vector<std::string> v;
  const auto finite = [](double x) { return std::isfinite(x); };
  if (!(lr > 0.0) || !finite(lr))
    v.push_back("trainer.lr: must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    v.push_back("trainer.momentum: must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !finite(weight_decay))
    v.push_back("trainer.weight_decay: must be >= 0");
  if (!(gamma >= 0.0) || !finite(gamma))
    v.push_back("trainer.gamma: must be >= 0");
  if (!(h >= 0.0) || !finite(h))
    v.push_back("trainer.h: must be >= 0");
  if (!(beta >= 0.0) || !finite(beta))
    v.push_back("trainer.beta: must be >= 0");
  if ((rule == Rule::Hero || rule == Rule::FirstOrder) && !(h > 0.0))
    v.push_back(std::string("trainer.h: must be > 0 for rule '") + to_string(rule) + "'");
  if (total_steps < 1)
    v.push_back("trainer.total_steps: must be >= 1");
  return v;
}

void TrainerConfig::validate() const
{
  auto v = violations();
  if (!v.empty())
    throw ConfigError(std::move(v));
}

TrainerState TrainerState::initial(const ParamSet &params, const TrainerConfig &cfg)
{
  return {0, GradientSet::zeros_like(params), cfg.lr};
}

double cosine_lr(std::int64_t t, std::int64_t total, double lr0)
{
  if (total < 1 || t < 0 || t > total)
    throw Error(ErrorCode::InvalidArgument, "cosine_lr needs 0 <= t <= T and T >= 1");
  if (t == total)
    return 0.0;
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(total)));
}

GradientSet layer_perturbation(const ParamSet &params, const GradientSet &grads, PerturbationScaling scaling)
{
  check_matches(params, grads, "gradient");
  GradientSet z = GradientSet::zeros_like(params);
  std::size_t k = 0;
  for (const auto &e : params)
  {
    if (!e.trainable)
      continue;
    const auto &g = grads[k].tensor;
    auto out = z[k].tensor.values();
    ++k;
    if (!e.perturbable)
      continue;
    const double gn = l2_norm(g.values());
    if (gn < 1e-12)
      continue;
    const auto w = e.tensor.values();
    const double wn = l2_norm(w);
    if (scaling == PerturbationScaling::LayerNorm)
    {
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = wn * (g[i] / gn);
    }
    else if (wn > 0.0)
    {
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (w[i] * w[i] / wn) * (g[i] / gn);
    }
  }
  return z;
}

namespace
{

void require_finite(const TrainerState &state, double loss, const GradientSet &g, const char *what)
{
  if (!std::isfinite(loss))
    throw NumericalError(state.step, std::string("non-finite loss at ") + what);
  if (!g.all_finite())
    throw NumericalError(state.step, std::string("non-finite gradient at ") + what);
}

double step_lr(const TrainerConfig &cfg, const TrainerState &state)
{
  if (state.step > cfg.total_steps)
    throw Error(ErrorCode::InvalidArgument, "step " + std::to_string(state.step) + " beyond total steps " +
                                              std::to_string(cfg.total_steps));
  return cosine_lr(state.step, cfg.total_steps, cfg.lr);
}

void require_h(const TrainerConfig &cfg)
{
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h))
    throw ConfigError({"trainer.h: must be > 0 for perturbed-gradient rules"});
}

// direction += alpha * W over trainable entries
void add_weight_decay(const TrainerConfig &cfg, const ParamSet &params, GradientSet &direction)
{
  std::size_t k = 0;
  for (const auto &e : params)
    if (e.trainable)
      axpy(cfg.weight_decay, e.tensor.values(), direction[k++].tensor.values());
}

// v <- mu v + direction; W <- W - lr v
void momentum_update(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const GradientSet &direction,
                     StepMetrics &m)
{
  if (!direction.all_finite())
    throw NumericalError(state.step, "non-finite update direction");
  if (state.velocity.size() != direction.size())
    state.velocity = GradientSet::zeros_like(params);
  std::size_t k = 0;
  for (auto &e : params)
  {
    if (!e.trainable)
      continue;
    auto v = state.velocity[k].tensor.values();
    const auto d = direction[k].tensor.values();
    auto w = e.tensor.values();
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      v[i] = cfg.momentum * v[i] + d[i];
      w[i] -= m.lr * v[i];
    }
    ++k;
  }
  state.lr = m.lr;
  ++state.step;
}

struct Clean
{
  double loss;
  GradientSet grad;
};

Clean clean_pass(const TrainerState &state, const ParamSet &params, const StepObjective &obj)
{
  auto vg = ad::value_and_grad(obj.clean, params);
  require_finite(state, vg.loss, vg.grad, "the current weights");
  return {vg.loss, std::move(vg.grad)};
}

struct Perturbed
{
  GradientSet z;
  ParamSet weights; // W + h z
  GradientSet grad; // grad L(W + h z)
};

Perturbed perturbed_pass(const TrainerConfig &cfg, const TrainerState &state, const ParamSet &params,
                         const GradientSet &g, const StepObjective &obj)
{
  Perturbed p;
  p.z = layer_perturbation(params, g, cfg.scaling);
  p.weights = displaced(params, p.z, cfg.h);
  auto vg = ad::value_and_grad(obj.probe, p.weights);
  require_finite(state, vg.loss, vg.grad, "the perturbed weights");
  p.grad = std::move(vg.grad);
  return p;
}

// G over perturbable layers, with per-layer z norms; returns grad L(W*) - g on
// perturbable entries and zero elsewhere.
GradientSet regularizer_terms(const ParamSet &params, const GradientSet &g, const Perturbed &p, StepMetrics &m)
{
  GradientSet diff = GradientSet::zeros_like(params);
  m.has_regularizer = true;
  m.regularizer = 0.0;
  std::size_t k = 0;
  for (const auto &e : params)
  {
    if (!e.trainable)
      continue;
    if (e.perturbable)
    {
      auto d = diff[k].tensor.values();
      const auto a = p.grad[k].tensor.values();
      const auto b = g[k].tensor.values();
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = a[i] - b[i];
      const double layer_g = dot(d, d);
      m.regularizer += layer_g;
      m.layers.push_back({e.name, l2_norm(p.z[k].tensor.values()), layer_g});
    }
    ++k;
  }
  return diff;
}

double perturbable_norm(const ParamSet &params, std::size_t *count = nullptr)
{
  double s = 0.0;
  std::size_t n = 0;
  for (const auto &e : params)
    if (e.perturbable)
    {
      s += dot(e.tensor.values(), e.tensor.values());
      n += e.tensor.size();
    }
  if (count)
    *count = n;
  return std::sqrt(s);
}

StepMetrics begin(const TrainerConfig &cfg, const TrainerState &state)
{
  StepMetrics m;
  m.lr = step_lr(cfg, state);
  m.passes = ad::pass_counts();
  return m;
}

void end(StepMetrics &m) { m.passes = ad::pass_counts() - m.passes; }

} // namespace

StepMetrics sgd_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj)
{
  auto m = begin(cfg, state);
  auto clean = clean_pass(state, params, obj);
  m.loss = clean.loss;
  m.grad_norm = clean.grad.norm();
  m.direction = std::move(clean.grad);
  add_weight_decay(cfg, params, m.direction);
  end(m);
  momentum_update(cfg, params, state, m.direction, m);
  return m;
}

StepMetrics first_order_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state,
                             const StepObjective &obj)
{
  require_h(cfg);
  auto m = begin(cfg, state);
  auto clean = clean_pass(state, params, obj);
  m.loss = clean.loss;
  m.grad_norm = clean.grad.norm();
  auto p = perturbed_pass(cfg, state, params, clean.grad, obj);
  regularizer_terms(params, clean.grad, p, m);
  m.direction = std::move(p.grad);
  add_weight_decay(cfg, params, m.direction);
  end(m);
  momentum_update(cfg, params, state, m.direction, m);
  return m;
}

StepMetrics grad_l1_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj)
{
  auto m = begin(cfg, state);
  auto clean = clean_pass(state, params, obj);
  m.loss = clean.loss;
  m.grad_norm = clean.grad.norm();
  m.direction = clean.grad;
  if (cfg.beta > 0.0)
  {
    // d/dW ||g||_1 = H sign(g), restricted to weight tensors
    GradientSet sign = GradientSet::zeros_like(params);
    std::size_t k = 0;
    bool any = false;
    for (const auto &e : params)
    {
      if (!e.trainable)
        continue;
      if (e.perturbable)
      {
        auto s = sign[k].tensor.values();
        const auto g = clean.grad[k].tensor.values();
        for (std::size_t i = 0; i < s.size(); ++i)
        {
          s[i] = (g[i] > 0.0) - (g[i] < 0.0);
          any = any || s[i] != 0.0;
        }
      }
      ++k;
    }
    if (any)
    {
      std::size_t n = 0;
      const double wn = perturbable_norm(params, &n);
      const double h_fd = 1e-3 * (1.0 + wn / std::sqrt(static_cast<double>(n)));
      auto hvp = ad::hvp_fd(obj.probe, params, clean.grad, sign, h_fd);
      if (!hvp.all_finite())
        throw NumericalError(state.step, "non-finite Hessian-vector product");
      for (std::size_t j = 0; j < hvp.size(); ++j)
        axpy(cfg.beta, hvp[j].tensor.values(), m.direction[j].tensor.values());
    }
  }
  add_weight_decay(cfg, params, m.direction);
  end(m);
  momentum_update(cfg, params, state, m.direction, m);
  return m;
}

StepMetrics hero_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj)
{
  require_h(cfg);
  auto m = begin(cfg, state);

  // clean gradient g on the batch
  auto clean = clean_pass(state, params, obj);
  m.loss = clean.loss;
  m.grad_norm = clean.grad.norm();

  // z per layer, W* = W + h z, grad L(W*); W itself is never modified
  auto p = perturbed_pass(cfg, state, params, clean.grad, obj);

  // G = sum_i ||grad_i L(W*) - g_i||^2 with g held constant
  auto diff = regularizer_terms(params, clean.grad, p, m);

  // composite gradient: grad L(W*) + alpha W + gamma grad G
  m.direction = p.grad;
  add_weight_decay(cfg, params, m.direction);
  if (cfg.gamma > 0.0)
  {
    // grad G(W*) = 2 H(W*) diff, one extra backward pass along diff
    m.regularizer_grad = GradientSet::zeros_like(params);
    const double dn = diff.norm();
    if (dn > 0.0)
    {
      const double eps = 1e-3 * (1.0 + perturbable_norm(p.weights)) / dn;
      m.regularizer_grad = ad::hvp_fd(obj.probe, p.weights, p.grad, diff, eps, ad::Purpose::Regularizer);
      for (auto &e : m.regularizer_grad)
        for (auto &v : e.tensor.values())
          v *= 2.0;
      if (!m.regularizer_grad.all_finite())
        throw NumericalError(state.step, "non-finite regularizer gradient");
    }
    for (std::size_t j = 0; j < m.direction.size(); ++j)
      axpy(cfg.gamma, m.regularizer_grad[j].tensor.values(), m.direction[j].tensor.values());
  }
  end(m);

  // momentum update at the original weights
  momentum_update(cfg, params, state, m.direction, m);
  return m;
}

StepMetrics apply_step(const TrainerConfig &cfg, ParamSet &params, TrainerState &state, const StepObjective &obj)
{
  switch (cfg.rule)
  {
    case Rule::Sgd:
      return sgd_step(cfg, params, state, obj);
    case Rule::FirstOrder:
      return first_order_step(cfg, params, state, obj);
    case Rule::GradL1:
      return grad_l1_step(cfg, params, state, obj);
    case Rule::Hero:
      return hero_step(cfg, params, state, obj);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown update rule");
}

} // namespace herolab::train
