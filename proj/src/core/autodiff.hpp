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

#ifndef HERO_LAB_CORE_AUTODIFF_HPP
#define HERO_LAB_CORE_AUTODIFF_HPP

#include "core/params.hpp"
#include "core/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace herolab::ad
{

class Tape;

struct Var
{
  Tape *tape = nullptr;
  std::size_t id = 0;

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
};

class BackwardContext
{
public:
  BackwardContext(const Tape &tape, std::size_t node, const Tensor &out_grad, std::vector<Tensor> &grads)
    : _tape(tape), _node(node), _out_grad(out_grad), _grads(grads)
  {
  }

  const Tensor &out_grad() const noexcept { return _out_grad; }
  const Tensor &output() const;
  const Tensor &input(std::size_t i) const;
  // Accumulation buffer for input i, or nullptr when it needs no gradient.
  Tensor *grad(std::size_t i) const;

private:
  const Tape &_tape;
  std::size_t _node;
  const Tensor &_out_grad;
  std::vector<Tensor> &_grads;
};

using BackwardFn = std::function<void(const BackwardContext &)>;

struct Node
{
  Tensor value;
  std::vector<std::size_t> inputs;
  BackwardFn backward;
  bool requires_grad = false;
  bool leaf = false;
  bool trainable = false;
  std::string name;
};

enum class Purpose
{
  Loss,
  Regularizer,
};

// Per-thread instrumentation of tape evaluations, split by purpose.
struct PassCounts
{
  std::int64_t loss_forward = 0;
  std::int64_t loss_backward = 0;
  std::int64_t regularizer_forward = 0;
  std::int64_t regularizer_backward = 0;

  friend PassCounts operator-(const PassCounts &a, const PassCounts &b)
  {
    return {a.loss_forward - b.loss_forward, a.loss_backward - b.loss_backward,
            a.regularizer_forward - b.regularizer_forward, a.regularizer_backward - b.regularizer_backward};
  }
  friend bool operator==(const PassCounts &, const PassCounts &) = default;
};

PassCounts pass_counts() noexcept;

// Reverse-mode record. Nodes are appended in evaluation order, so every node's
// inputs precede it.
class Tape
{
public:
  explicit Tape(Purpose purpose = Purpose::Loss) : _purpose(purpose) {}

  Var leaf(Tensor value, std::string name, bool trainable);
  Var constant(Tensor value);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  void set_root(Var root);
  bool has_root() const noexcept { return _has_root; }
  Var root() { return Var{this, _root}; }

  std::size_t size() const noexcept { return _nodes.size(); }
  const Node &node(std::size_t i) const { return _nodes.at(i); }
  Purpose purpose() const noexcept { return _purpose; }

  // One reverse sweep from the root. Returns gradients of the root for every
  // trainable leaf, keyed by leaf name, in leaf order.
  GradientSet backward() const;

private:
  std::vector<Node> _nodes;
  std::size_t _root = 0;
  bool _has_root = false;
  Purpose _purpose;
};

// Leaves bound to a ParamSet, one per entry and in the same order.
class ParamLeaves
{
public:
  ParamLeaves(Tape &tape, const ParamSet &params);

  Var operator[](std::size_t i) const { return _vars[i]; }
  Var at(std::string_view name) const;
  std::size_t size() const noexcept { return _vars.size(); }

private:
  std::vector<std::string> _names;
  std::vector<Var> _vars;
};

// Records a scalar loss on `tape` from the bound parameter leaves.
using LossFn = std::function<Var(Tape &, const ParamLeaves &)>;

struct ForwardResult
{
  double loss = 0.0;
  Tape record;
};

ForwardResult forward(const LossFn &loss_fn, const ParamSet &params, Purpose purpose = Purpose::Loss);
GradientSet backward(const Tape &record);

// Loss value and gradient in one call.
struct ValueAndGrad
{
  double loss = 0.0;
  GradientSet grad;
};
ValueAndGrad value_and_grad(const LossFn &loss_fn, const ParamSet &params, Purpose purpose = Purpose::Loss);

// (grad L(W + h v) - grad L(W)) / h with both gradients on the same loss_fn.
GradientSet hvp_fd(const LossFn &loss_fn, const ParamSet &params, const GradientSet &v, double h);
// Same, reusing an already computed grad L(W).
GradientSet hvp_fd(const LossFn &loss_fn, const ParamSet &params, const GradientSet &grad_at_params,
                   const GradientSet &v, double h, Purpose purpose = Purpose::Loss);

// ---- primitive operations ----

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var sum(Var a);
Var dot(Var a, Var b);
Var square(Var a);
Var tanh(Var a);
Var relu(Var a);
Var reshape(Var a, Shape shape);

// a: (m, k), b: (k, n)
Var matmul(Var a, Var b);
// x: (m, n), bias: (n)
Var add_bias(Var x, Var bias);
// x: (N, C, H, W), bias: (C)
Var add_channel_bias(Var x, Var bias);
// x: (N, C, H, W), w: (O, C, kh, kw); stride 1, symmetric zero padding.
Var conv2d(Var x, Var w, std::size_t padding);
// 2x2 average pooling with stride 2; trailing odd rows/cols are dropped.
Var avg_pool2(Var x);

struct BatchMoments
{
  Tensor mean;
  Tensor var; // biased
  std::size_t count = 0; // elements per channel
};

// Per-channel normalization over every axis but 1, using batch moments.
// x: (N, C) or (N, C, H, W). Writes the batch moments to `moments` if given.
Var batch_norm_train(Var x, Var scale, Var shift, double eps, BatchMoments *moments = nullptr);
Var batch_norm_eval(Var x, Var scale, Var shift, const Tensor &mean, const Tensor &var, double eps);

// Mean cross-entropy of softmax(logits) against integer labels.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

} // namespace herolab::ad

#endif // HERO_LAB_CORE_AUTODIFF_HPP
