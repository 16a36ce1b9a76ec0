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

#include "models/model.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <cmath>

namespace herolab::models
{

const char *to_string(Arch arch) { return arch == Arch::Mlp ? "mlp" : "smallconv"; }

Arch arch_from_string(std::string_view s)
{
  if (s == "mlp")
    return Arch::Mlp;
  if (s == "smallconv")
    return Arch::SmallConv;
  throw Error(ErrorCode::InvalidArgument, "unknown architecture '" + std::string(s) + "'");
}

std::vector<std::string> ModelSpec::violations() const
{
  std::vector<std::string> v;
  if (classes < 2)
    v.push_back("model.classes: must be >= 2");
  if (input_shape.empty() || std::find(input_shape.begin(), input_shape.end(), 0) != input_shape.end())
    v.push_back("model.input_shape: dimensions must be positive");
  if (arch == Arch::Mlp)
  {
    if (widths.size() < 2)
      v.push_back("model.widths: need at least input and output widths");
    if (std::find(widths.begin(), widths.end(), 0) != widths.end())
      v.push_back("model.widths: widths must be positive");
    if (!widths.empty() && !input_shape.empty() && widths.front() != shape_size(input_shape))
      v.push_back("model.widths: first width " + std::to_string(widths.front()) + " != input size " +
                  std::to_string(shape_size(input_shape)));
    if (!widths.empty() && widths.back() != classes)
      v.push_back("model.widths: last width " + std::to_string(widths.back()) + " != classes " +
                  std::to_string(classes));
  }
  else
  {
    if (input_shape.size() != 3)
      v.push_back("model.input_shape: smallconv expects (channels, height, width)");
    if (channels.empty() || std::find(channels.begin(), channels.end(), 0) != channels.end())
      v.push_back("model.channels: need at least one positive channel count");
    if (kernel == 0 || kernel % 2 == 0)
      v.push_back("model.kernel: must be odd and positive");
    if (input_shape.size() == 3)
    {
      std::size_t h = input_shape[1], w = input_shape[2];
      for (std::size_t i = 0; i < channels.size(); ++i)
      {
        if (h < 2 || w < 2)
        {
          v.push_back("model.channels: input too small for " + std::to_string(channels.size()) + " pooling stages");
          break;
        }
        h /= 2, w /= 2;
      }
    }
  }
  return v;
}

void ModelSpec::validate() const
{
  auto v = violations();
  if (!v.empty())
    throw ConfigError(std::move(v));
}

std::vector<ExpectedParam> expected_params(const ModelSpec &spec)
{
  std::vector<ExpectedParam> out;
  if (spec.arch == Arch::Mlp)
  {
    const std::size_t layers = spec.widths.size() - 1;
    for (std::size_t i = 0; i < layers; ++i)
    {
      const std::string fc = "fc" + std::to_string(i);
      const bool hidden = i + 1 < layers;
      out.push_back({fc + ".weight", {spec.widths[i], spec.widths[i + 1]}, ParamKind::Weight});
      if (hidden && spec.batch_norm)
      {
        const std::string bn = "bn" + std::to_string(i);
        out.push_back({bn + ".scale", {spec.widths[i + 1]}, ParamKind::BnScale});
        out.push_back({bn + ".shift", {spec.widths[i + 1]}, ParamKind::BnShift});
      }
      else
        out.push_back({fc + ".bias", {spec.widths[i + 1]}, ParamKind::Bias});
    }
    return out;
  }

  std::size_t c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
  for (std::size_t i = 0; i < spec.channels.size(); ++i)
  {
    const std::string conv = "conv" + std::to_string(i);
    const std::size_t o = spec.channels[i];
    out.push_back({conv + ".weight", {o, c, spec.kernel, spec.kernel}, ParamKind::Weight});
    if (spec.batch_norm)
    {
      const std::string bn = "bn" + std::to_string(i);
      out.push_back({bn + ".scale", {o}, ParamKind::BnScale});
      out.push_back({bn + ".shift", {o}, ParamKind::BnShift});
    }
    else
      out.push_back({conv + ".bias", {o}, ParamKind::Bias});
    c = o, h /= 2, w /= 2;
  }
  out.push_back({"fc.weight", {c * h * w, spec.classes}, ParamKind::Weight});
  out.push_back({"fc.bias", {spec.classes}, ParamKind::Bias});
  return out;
}

ParamSet build(const ModelSpec &spec, std::uint64_t seed)
{
  spec.validate();
  Rng rng(seed);
  ParamSet params;
  for (const auto &e : expected_params(spec))
  {
    Tensor t(e.shape);
    switch (e.kind)
    {
      case ParamKind::Weight:
      {
        // linear (in, out): fan_in = in; conv (out, in, kh, kw): fan_in = in*kh*kw
        const std::size_t fan_in = e.shape.size() == 2 ? e.shape[0] : t.size() / e.shape[0];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto &v : t.values())
          v = rng.uniform(-bound, bound);
        break;
      }
      case ParamKind::BnScale:
        t = Tensor(e.shape, 1.0);
        break;
      case ParamKind::Bias:
      case ParamKind::BnShift:
        break;
    }
    params.add(e.name, std::move(t), e.kind);
  }
  return params;
}

BufferSet initial_buffers(const ModelSpec &spec)
{
  BufferSet out;
  for (const auto &e : expected_params(spec))
    if (e.kind == ParamKind::BnScale)
    {
      const auto name = e.name.substr(0, e.name.find('.'));
      out.push_back({name, Tensor(e.shape, 0.0), Tensor(e.shape, 1.0)});
    }
  return out;
}

void check_params(const ModelSpec &spec, const ParamSet &params)
{
  for (const auto &e : expected_params(spec))
  {
    const auto *p = params.find(e.name);
    if (!p)
      throw ShapeError(e.name, "parameter missing");
    if (p->tensor.shape() != e.shape)
      throw ShapeError(e.name, "expected shape " + shape_str(e.shape) + ", got " + shape_str(p->tensor.shape()));
  }
}

namespace
{

const RunningStats &find_buffer(const BufferSet *buffers, const std::string &name)
{
  if (buffers)
    for (const auto &b : *buffers)
      if (b.name == name)
        return b;
  throw ShapeError(name, "running statistics missing");
}

ad::Var normalize(ad::Var x, const ad::ParamLeaves &params, const std::string &bn, Mode mode,
                  const BufferSet *buffers, std::vector<ad::BatchMoments> *moments)
{
  const auto scale = params.at(bn + ".scale");
  const auto shift = params.at(bn + ".shift");
  if (mode == Mode::Eval)
  {
    const auto &stats = find_buffer(buffers, bn);
    return ad::batch_norm_eval(x, scale, shift, stats.mean, stats.var, bn_eps);
  }
  ad::BatchMoments m;
  auto y = ad::batch_norm_train(x, scale, shift, bn_eps, &m);
  if (moments)
    moments->push_back(std::move(m));
  return y;
}

} // namespace

ad::Var record_logits(ad::Tape &tape, const ModelSpec &spec, const ad::ParamLeaves &params, const Tensor &inputs,
                      Mode mode, const BufferSet *buffers, std::vector<ad::BatchMoments> *moments)
{
  for (const auto &e : expected_params(spec))
    if (params.at(e.name).shape() != e.shape)
      throw ShapeError(e.name, "expected shape " + shape_str(e.shape) + ", got " +
                                 shape_str(params.at(e.name).shape()));
  if (inputs.rank() < 1)
    throw ShapeError("inputs", "batch tensor must have a leading batch axis");
  const std::size_t batch = inputs.dim(0);
  const Shape sample(inputs.shape().begin() + 1, inputs.shape().end());
  if (shape_size(sample) != shape_size(spec.input_shape) ||
      (spec.arch == Arch::SmallConv && sample != spec.input_shape))
    throw ShapeError("inputs", "sample shape " + shape_str(sample) + " does not match model input " +
                                 shape_str(spec.input_shape));

  if (spec.arch == Arch::Mlp)
  {
    auto h = tape.constant(inputs.reshaped({batch, spec.widths.front()}));
    const std::size_t layers = spec.widths.size() - 1;
    for (std::size_t i = 0; i < layers; ++i)
    {
      const std::string idx = std::to_string(i);
      h = ad::matmul(h, params.at("fc" + idx + ".weight"));
      if (i + 1 == layers)
        return ad::add_bias(h, params.at("fc" + idx + ".bias"));
      h = spec.batch_norm ? normalize(h, params, "bn" + idx, mode, buffers, moments)
                          : ad::add_bias(h, params.at("fc" + idx + ".bias"));
      h = ad::relu(h);
    }
    return h;
  }

  Shape shape{batch};
  shape.insert(shape.end(), spec.input_shape.begin(), spec.input_shape.end());
  auto h = tape.constant(inputs.reshaped(shape));
  for (std::size_t i = 0; i < spec.channels.size(); ++i)
  {
    const std::string idx = std::to_string(i);
    h = ad::conv2d(h, params.at("conv" + idx + ".weight"), spec.kernel / 2);
    h = spec.batch_norm ? normalize(h, params, "bn" + idx, mode, buffers, moments)
                        : ad::add_channel_bias(h, params.at("conv" + idx + ".bias"));
    h = ad::relu(h);
    h = ad::avg_pool2(h);
  }
  const auto &hs = h.shape();
  h = ad::reshape(h, {batch, hs[1] * hs[2] * hs[3]});
  return ad::add_bias(ad::matmul(h, params.at("fc.weight")), params.at("fc.bias"));
}

ad::LossFn classification_loss(const ModelSpec &spec, data::LabeledBatch batch, Mode mode, const BufferSet *buffers,
                               ForwardTrace *trace)
{
  if (batch.size() == 0)
    throw Error(ErrorCode::InvalidArgument, "empty batch");
  return [spec, batch = std::move(batch), mode, buffers, trace](ad::Tape &tape, const ad::ParamLeaves &params) {
    std::vector<ad::BatchMoments> moments;
    auto logits = record_logits(tape, spec, params, batch.inputs, mode, buffers, &moments);
    if (trace)
    {
      trace->logits = logits.value();
      trace->moments = std::move(moments);
    }
    return ad::softmax_cross_entropy(logits, batch.labels);
  };
}

Tensor predict(const ModelSpec &spec, const ParamSet &params, const BufferSet &buffers, const Tensor &inputs, Mode mode)
{
  ad::Tape tape;
  ad::ParamLeaves leaves(tape, params);
  return record_logits(tape, spec, leaves, inputs, mode, &buffers).value();
}

void update_running_stats(BufferSet &buffers, const std::vector<ad::BatchMoments> &moments)
{
  if (moments.size() != buffers.size())
    throw Error(ErrorCode::InvalidArgument, "batch moments do not match running statistics");
  for (std::size_t i = 0; i < moments.size(); ++i)
  {
    const auto &m = moments[i];
    auto &b = buffers[i];
    const double n = static_cast<double>(m.count);
    const double unbias = n > 1 ? n / (n - 1.0) : 1.0;
    for (std::size_t c = 0; c < b.mean.size(); ++c)
    {
      b.mean[c] = bn_momentum * b.mean[c] + (1.0 - bn_momentum) * m.mean[c];
      b.var[c] = bn_momentum * b.var[c] + (1.0 - bn_momentum) * m.var[c] * unbias;
    }
  }
}

std::size_t count_correct(const Tensor &logits, std::span<const int> labels)
{
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
  {
    const auto row = logits.values().subspan(i * k, k);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    correct += (best == labels[i]);
  }
  return correct;
}

Evaluation evaluate(const ModelSpec &spec, const ParamSet &params, const BufferSet &buffers,
                    const data::LabeledDataset &ds, std::size_t batch_size)
{
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (const auto &batch : data::sequential_batches(ds, batch_size))
  {
    ad::Tape tape;
    ad::ParamLeaves leaves(tape, params);
    auto logits = record_logits(tape, spec, leaves, batch.inputs, Mode::Eval, &buffers);
    loss_sum += ad::softmax_cross_entropy(logits, batch.labels).value()[0] * static_cast<double>(batch.size());
    correct += count_correct(logits.value(), batch.labels);
  }
  const double n = static_cast<double>(ds.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

} // namespace herolab::models
