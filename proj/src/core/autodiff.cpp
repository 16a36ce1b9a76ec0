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

#include "core/autodiff.hpp"

#include "core/error.hpp"
#include "core/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace herolab::ad
{

namespace
{

thread_local PassCounts t_counts;

Tape &tape_of(Var a, Var b)
{
  if (a.tape == nullptr || a.tape != b.tape)
    throw Error(ErrorCode::InvalidArgument, "operands recorded on different tapes");
  return *a.tape;
}

void require_same_shape(const char *op, Var a, Var b)
{
  if (a.shape() != b.shape())
    throw ShapeError(op, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// C(m,n) = A(m,k) B(k,n)
void gemm_nn(const double *a, const double *b, double *c, std::size_t m, std::size_t k, std::size_t n)
{
  parallel_for(m, 8, [=](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i)
    {
      double *ci = c + i * n;
      std::fill(ci, ci + n, 0.0);
      for (std::size_t p = 0; p < k; ++p)
      {
        const double aip = a[i * k + p];
        if (aip == 0.0)
          continue;
        const double *bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j)
          ci[j] += aip * bp[j];
      }
    }
  });
}

// C(m,k) += G(m,n) B(k,n)^T
void gemm_nt_acc(const double *g, const double *b, double *c, std::size_t m, std::size_t n, std::size_t k)
{
  parallel_for(m, 8, [=](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i)
    {
      const double *gi = g + i * n;
      for (std::size_t p = 0; p < k; ++p)
      {
        const double *bp = b + p * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          s += gi[j] * bp[j];
        c[i * k + p] += s;
      }
    }
  });
}

// C(k,n) += A(m,k)^T G(m,n)
void gemm_tn_acc(const double *a, const double *g, double *c, std::size_t m, std::size_t k, std::size_t n)
{
  parallel_for(k, 8, [=](std::size_t p0, std::size_t p1) {
    for (std::size_t i = 0; i < m; ++i)
    {
      const double *gi = g + i * n;
      for (std::size_t p = p0; p < p1; ++p)
      {
        const double aip = a[i * k + p];
        if (aip == 0.0)
          continue;
        double *cp = c + p * n;
        for (std::size_t j = 0; j < n; ++j)
          cp[j] += aip * gi[j];
      }
    }
  });
}

struct ConvGeometry
{
  std::size_t n, c, h, w, o, kh, kw, pad, ho, wo;
  std::size_t patch() const { return c * kh * kw; }
  std::size_t pixels() const { return ho * wo; }
};

// col(C*kh*kw, Ho*Wo) for sample `s`
void im2col(const double *x, const ConvGeometry &g, std::size_t s, double *col)
{
  const double *xs = x + s * g.c * g.h * g.w;
  for (std::size_t ch = 0; ch < g.c; ++ch)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj)
      {
        double *row = col + ((ch * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oi = 0; oi < g.ho; ++oi)
        {
          const long ii = static_cast<long>(oi + ki) - static_cast<long>(g.pad);
          for (std::size_t oj = 0; oj < g.wo; ++oj)
          {
            const long jj = static_cast<long>(oj + kj) - static_cast<long>(g.pad);
            const bool inside = ii >= 0 && jj >= 0 && ii < static_cast<long>(g.h) && jj < static_cast<long>(g.w);
            row[oi * g.wo + oj] = inside ? xs[(ch * g.h + ii) * g.w + jj] : 0.0;
          }
        }
      }
}

void col2im_acc(const double *col, const ConvGeometry &g, std::size_t s, double *dx)
{
  double *xs = dx + s * g.c * g.h * g.w;
  for (std::size_t ch = 0; ch < g.c; ++ch)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj)
      {
        const double *row = col + ((ch * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oi = 0; oi < g.ho; ++oi)
        {
          const long ii = static_cast<long>(oi + ki) - static_cast<long>(g.pad);
          if (ii < 0 || ii >= static_cast<long>(g.h))
            continue;
          for (std::size_t oj = 0; oj < g.wo; ++oj)
          {
            const long jj = static_cast<long>(oj + kj) - static_cast<long>(g.pad);
            if (jj < 0 || jj >= static_cast<long>(g.w))
              continue;
            xs[(ch * g.h + ii) * g.w + jj] += row[oi * g.wo + oj];
          }
        }
      }
}

// Channel layout helper for (N, C) and (N, C, H, W).
struct ChannelLayout
{
  std::size_t n, c, inner;
  std::size_t count() const { return n * inner; }
  std::size_t index(std::size_t s, std::size_t ch, std::size_t k) const { return (s * c + ch) * inner + k; }
};

ChannelLayout channel_layout(const char *op, const Shape &shape)
{
  if (shape.size() == 2)
    return {shape[0], shape[1], 1};
  if (shape.size() == 4)
    return {shape[0], shape[1], shape[2] * shape[3]};
  throw ShapeError(op, "expects (N,C) or (N,C,H,W), got " + shape_str(shape));
}

} // namespace

PassCounts pass_counts() noexcept { return t_counts; }

const Tensor &Var::value() const { return tape->node(id).value; }

const Tensor &BackwardContext::output() const { return _tape.node(_node).value; }

const Tensor &BackwardContext::input(std::size_t i) const
{
  return _tape.node(_tape.node(_node).inputs.at(i)).value;
}

Tensor *BackwardContext::grad(std::size_t i) const
{
  const auto idx = _tape.node(_node).inputs.at(i);
  if (!_tape.node(idx).requires_grad)
    return nullptr;
  return &_grads[idx];
}

Var Tape::leaf(Tensor value, std::string name, bool trainable)
{
  Node n;
  n.value = std::move(value);
  n.leaf = true;
  n.trainable = trainable;
  n.requires_grad = trainable;
  n.name = std::move(name);
  _nodes.push_back(std::move(n));
  return Var{this, _nodes.size() - 1};
}

Var Tape::constant(Tensor value) { return leaf(std::move(value), {}, false); }

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward)
{
  Node n;
  n.value = std::move(value);
  for (auto v : inputs)
  {
    if (v.tape != this)
      throw Error(ErrorCode::InvalidArgument, "input recorded on another tape");
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || _nodes[v.id].requires_grad;
  }
  n.backward = std::move(backward);
  _nodes.push_back(std::move(n));
  return Var{this, _nodes.size() - 1};
}

void Tape::set_root(Var root)
{
  if (root.tape != this)
    throw Error(ErrorCode::InvalidArgument, "root recorded on another tape");
  _root = root.id;
  _has_root = true;
}

GradientSet Tape::backward() const
{
  if (!_has_root)
    throw Error(ErrorCode::InvalidArgument, "record has no root");
  if (_nodes[_root].value.size() != 1)
    throw ShapeError("backward", "root must be a scalar, got shape " + shape_str(_nodes[_root].value.shape()));

  if (_purpose == Purpose::Loss)
    ++t_counts.loss_backward;
  else
    ++t_counts.regularizer_backward;

  std::vector<Tensor> grads(_nodes.size());
  std::vector<char> live(_nodes.size(), 0);
  for (std::size_t i = 0; i <= _root; ++i)
    if (_nodes[i].requires_grad)
      grads[i] = Tensor::zeros_like(_nodes[i].value);
  grads[_root].values()[0] = 1.0;
  live[_root] = 1;

  for (std::size_t i = _root + 1; i-- > 0;)
  {
    const Node &n = _nodes[i];
    if (!live[i] || !n.requires_grad || n.leaf)
      continue;
    BackwardContext ctx(*this, i, grads[i], grads);
    n.backward(ctx);
    for (auto in : n.inputs)
      if (_nodes[in].requires_grad)
        live[in] = 1;
  }

  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i <= _root; ++i)
    if (_nodes[i].leaf && _nodes[i].trainable)
      out.push_back({_nodes[i].name, std::move(grads[i])});
  // trainable leaves recorded after the root never influence it
  for (std::size_t i = _root + 1; i < _nodes.size(); ++i)
    if (_nodes[i].leaf && _nodes[i].trainable)
      out.push_back({_nodes[i].name, Tensor::zeros_like(_nodes[i].value)});
  return GradientSet(std::move(out));
}

ParamLeaves::ParamLeaves(Tape &tape, const ParamSet &params)
{
  for (const auto &e : params)
  {
    _names.push_back(e.name);
    _vars.push_back(tape.leaf(e.tensor, e.name, e.trainable));
  }
}

Var ParamLeaves::at(std::string_view name) const
{
  for (std::size_t i = 0; i < _names.size(); ++i)
    if (_names[i] == name)
      return _vars[i];
  throw ShapeError(std::string(name), "parameter missing from the parameter set");
}

ForwardResult forward(const LossFn &loss_fn, const ParamSet &params, Purpose purpose)
{
  if (purpose == Purpose::Loss)
    ++t_counts.loss_forward;
  else
    ++t_counts.regularizer_forward;
  ForwardResult r{0.0, Tape(purpose)};
  ParamLeaves leaves(r.record, params);
  Var root = loss_fn(r.record, leaves);
  if (root.tape != &r.record)
    throw Error(ErrorCode::InvalidArgument, "loss function returned a variable from another tape");
  r.record.set_root(root);
  const Tensor &v = root.value();
  if (v.size() != 1)
    throw ShapeError("loss", "loss must be a scalar, got shape " + shape_str(v.shape()));
  r.loss = v[0];
  return r;
}

GradientSet backward(const Tape &record) { return record.backward(); }

ValueAndGrad value_and_grad(const LossFn &loss_fn, const ParamSet &params, Purpose purpose)
{
  auto fr = forward(loss_fn, params, purpose);
  return {fr.loss, fr.record.backward()};
}

GradientSet hvp_fd(const LossFn &loss_fn, const ParamSet &params, const GradientSet &grad_at_params,
                   const GradientSet &v, double h, Purpose purpose)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::InvalidArgument, "hvp_fd: step h must be positive and finite");
  check_matches(params, v, "hvp direction");
  check_matches(params, grad_at_params, "gradient");
  auto shifted = value_and_grad(loss_fn, displaced(params, v, h), purpose).grad;
  for (std::size_t k = 0; k < shifted.size(); ++k)
  {
    auto out = shifted[k].tensor.values();
    auto base = grad_at_params[k].tensor.values();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (out[i] - base[i]) / h;
  }
  return shifted;
}

GradientSet hvp_fd(const LossFn &loss_fn, const ParamSet &params, const GradientSet &v, double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::InvalidArgument, "hvp_fd: step h must be positive and finite");
  check_matches(params, v, "hvp direction");
  auto base = value_and_grad(loss_fn, params).grad;
  return hvp_fd(loss_fn, params, base, v, h);
}

// ---- primitives ----

Var add(Var a, Var b)
{
  require_same_shape("add", a, b);
  Tensor out = a.value();
  axpy(1.0, b.value().values(), out.values());
  Var in[] = {a, b};
  return tape_of(a, b).record(std::move(out), in, [](const BackwardContext &ctx) {
    for (std::size_t k = 0; k < 2; ++k)
      if (auto *g = ctx.grad(k))
        axpy(1.0, ctx.out_grad().values(), g->values());
  });
}

Var sub(Var a, Var b)
{
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  axpy(-1.0, b.value().values(), out.values());
  Var in[] = {a, b};
  return tape_of(a, b).record(std::move(out), in, [](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
      axpy(1.0, ctx.out_grad().values(), g->values());
    if (auto *g = ctx.grad(1))
      axpy(-1.0, ctx.out_grad().values(), g->values());
  });
}

Var mul(Var a, Var b)
{
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= bv[i];
  Var in[] = {a, b};
  return tape_of(a, b).record(std::move(out), in, [](const BackwardContext &ctx) {
    auto go = ctx.out_grad().values();
    if (auto *g = ctx.grad(0))
    {
      auto o = ctx.input(1).values();
      for (std::size_t i = 0; i < go.size(); ++i)
        (*g)[i] += go[i] * o[i];
    }
    if (auto *g = ctx.grad(1))
    {
      auto o = ctx.input(0).values();
      for (std::size_t i = 0; i < go.size(); ++i)
        (*g)[i] += go[i] * o[i];
    }
  });
}

Var scale(Var a, double s)
{
  Tensor out = a.value();
  for (auto &v : out.values())
    v *= s;
  Var in[] = {a};
  return a.tape->record(std::move(out), in, [s](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
      axpy(s, ctx.out_grad().values(), g->values());
  });
}

Var sum(Var a)
{
  Var in[] = {a};
  return a.tape->record(Tensor::scalar(herolab::sum(a.value().values())), in, [](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
    {
      const double go = ctx.out_grad()[0];
      for (auto &v : g->values())
        v += go;
    }
  });
}

Var dot(Var a, Var b)
{
  require_same_shape("dot", a, b);
  Var in[] = {a, b};
  return tape_of(a, b).record(Tensor::scalar(herolab::dot(a.value().values(), b.value().values())), in,
                              [](const BackwardContext &ctx) {
                                const double go = ctx.out_grad()[0];
                                if (auto *g = ctx.grad(0))
                                  axpy(go, ctx.input(1).values(), g->values());
                                if (auto *g = ctx.grad(1))
                                  axpy(go, ctx.input(0).values(), g->values());
                              });
}

Var square(Var a) { return mul(a, a); }

Var tanh(Var a)
{
  Tensor out = a.value();
  for (auto &v : out.values())
    v = std::tanh(v);
  Var in[] = {a};
  return a.tape->record(std::move(out), in, [](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
    {
      auto y = ctx.output().values();
      auto go = ctx.out_grad().values();
      for (std::size_t i = 0; i < y.size(); ++i)
        (*g)[i] += go[i] * (1.0 - y[i] * y[i]);
    }
  });
}

Var relu(Var a)
{
  Tensor out = a.value();
  for (auto &v : out.values())
    v = v > 0.0 ? v : 0.0;
  Var in[] = {a};
  return a.tape->record(std::move(out), in, [](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
    {
      auto x = ctx.input(0).values();
      auto go = ctx.out_grad().values();
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) // subgradient 0 at the kink
          (*g)[i] += go[i];
    }
  });
}

Var reshape(Var a, Shape shape)
{
  Tensor out = a.value().reshaped(std::move(shape));
  Var in[] = {a};
  return a.tape->record(std::move(out), in, [](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
      axpy(1.0, ctx.out_grad().values(), g->values());
  });
}

Var matmul(Var a, Var b)
{
  const auto &as = a.shape();
  const auto &bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0])
    throw ShapeError("matmul", shape_str(as) + " x " + shape_str(bs));
  const std::size_t m = as[0], k = as[1], n = bs[1];
  Tensor out(Shape{m, n});
  gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  Var in[] = {a, b};
  return tape_of(a, b).record(std::move(out), in, [m, k, n](const BackwardContext &ctx) {
    const double *go = ctx.out_grad().data();
    if (auto *g = ctx.grad(0))
      gemm_nt_acc(go, ctx.input(1).data(), g->data(), m, n, k);
    if (auto *g = ctx.grad(1))
      gemm_tn_acc(ctx.input(0).data(), go, g->data(), m, k, n);
  });
}

Var add_bias(Var x, Var bias)
{
  const auto &xs = x.shape();
  if (xs.size() != 2 || bias.shape() != Shape{xs[1]})
    throw ShapeError("add_bias", shape_str(xs) + " + " + shape_str(bias.shape()));
  const std::size_t m = xs[0], n = xs[1];
  Tensor out = x.value();
  const auto bv = bias.value().values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] += bv[j];
  Var in[] = {x, bias};
  return tape_of(x, bias).record(std::move(out), in, [m, n](const BackwardContext &ctx) {
    auto go = ctx.out_grad().values();
    if (auto *g = ctx.grad(0))
      axpy(1.0, go, g->values());
    if (auto *g = ctx.grad(1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          (*g)[j] += go[i * n + j];
  });
}

Var add_channel_bias(Var x, Var bias)
{
  const auto &xs = x.shape();
  if (xs.size() != 4 || bias.shape() != Shape{xs[1]})
    throw ShapeError("add_channel_bias", shape_str(xs) + " + " + shape_str(bias.shape()));
  const std::size_t n = xs[0], c = xs[1], inner = xs[2] * xs[3];
  Tensor out = x.value();
  const auto bv = bias.value().values();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < inner; ++k)
        out[(s * c + ch) * inner + k] += bv[ch];
  Var in[] = {x, bias};
  return tape_of(x, bias).record(std::move(out), in, [n, c, inner](const BackwardContext &ctx) {
    auto go = ctx.out_grad().values();
    if (auto *g = ctx.grad(0))
      axpy(1.0, go, g->values());
    if (auto *g = ctx.grad(1))
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t k = 0; k < inner; ++k)
            (*g)[ch] += go[(s * c + ch) * inner + k];
  });
}

Var conv2d(Var x, Var w, std::size_t padding)
{
  const auto &xs = x.shape();
  const auto &ws = w.shape();
  if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[1])
    throw ShapeError("conv2d", "input " + shape_str(xs) + " vs kernel " + shape_str(ws));
  if (xs[2] + 2 * padding < ws[2] || xs[3] + 2 * padding < ws[3])
    throw ShapeError("conv2d", "kernel larger than padded input");
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], padding, 0, 0};
  g.ho = g.h + 2 * padding - g.kh + 1;
  g.wo = g.w + 2 * padding - g.kw + 1;

  Tensor out(Shape{g.n, g.o, g.ho, g.wo});
  const double *xv = x.value().data();
  const double *wv = w.value().data();
  parallel_for(g.n, 1, [&](std::size_t s0, std::size_t s1) {
    std::vector<double> col(g.patch() * g.pixels());
    for (std::size_t s = s0; s < s1; ++s)
    {
      im2col(xv, g, s, col.data());
      gemm_nn(wv, col.data(), out.data() + s * g.o * g.pixels(), g.o, g.patch(), g.pixels());
    }
  });

  Var in[] = {x, w};
  return tape_of(x, w).record(std::move(out), in, [g](const BackwardContext &ctx) {
    const double *xv = ctx.input(0).data();
    const double *wv = ctx.input(1).data();
    const double *go = ctx.out_grad().data();
    Tensor *gx = ctx.grad(0);
    Tensor *gw = ctx.grad(1);
    std::vector<double> col(g.patch() * g.pixels());
    std::vector<double> dcol(g.patch() * g.pixels());
    for (std::size_t s = 0; s < g.n; ++s)
    {
      const double *gos = go + s * g.o * g.pixels();
      if (gw)
      {
        im2col(xv, g, s, col.data());
        gemm_nt_acc(gos, col.data(), gw->data(), g.o, g.pixels(), g.patch());
      }
      if (gx)
      {
        std::fill(dcol.begin(), dcol.end(), 0.0);
        gemm_tn_acc(wv, gos, dcol.data(), g.o, g.patch(), g.pixels());
        col2im_acc(dcol.data(), g, s, gx->data());
      }
    }
  });
}

Var avg_pool2(Var x)
{
  const auto &xs = x.shape();
  if (xs.size() != 4 || xs[2] < 2 || xs[3] < 2)
    throw ShapeError("avg_pool2", "expects (N,C,H,W) with H,W >= 2, got " + shape_str(xs));
  const std::size_t nc = xs[0] * xs[1], h = xs[2], w = xs[3], ho = h / 2, wo = w / 2;
  Tensor out(Shape{xs[0], xs[1], ho, wo});
  const double *xv = x.value().data();
  for (std::size_t p = 0; p < nc; ++p)
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j)
      {
        const double *base = xv + p * h * w + 2 * i * w + 2 * j;
        out[(p * ho + i) * wo + j] = 0.25 * (base[0] + base[1] + base[w] + base[w + 1]);
      }
  Var in[] = {x};
  return x.tape->record(std::move(out), in, [nc, h, w, ho, wo](const BackwardContext &ctx) {
    if (auto *g = ctx.grad(0))
    {
      const double *go = ctx.out_grad().data();
      double *gx = g->data();
      for (std::size_t p = 0; p < nc; ++p)
        for (std::size_t i = 0; i < ho; ++i)
          for (std::size_t j = 0; j < wo; ++j)
          {
            const double v = 0.25 * go[(p * ho + i) * wo + j];
            double *base = gx + p * h * w + 2 * i * w + 2 * j;
            base[0] += v;
            base[1] += v;
            base[w] += v;
            base[w + 1] += v;
          }
    }
  });
}

Var batch_norm_train(Var x, Var scale, Var shift, double eps, BatchMoments *moments)
{
  const auto lay = channel_layout("batch_norm", x.shape());
  if (scale.shape() != Shape{lay.c} || shift.shape() != Shape{lay.c})
    throw ShapeError("batch_norm", "scale/shift must have shape (" + std::to_string(lay.c) + ")");
  if (lay.n < 2)
    throw ShapeError("batch_norm", "training-mode batch normalization needs at least 2 samples, got 1");

  const auto xv = x.value().values();
  const auto gv = scale.value().values();
  const auto bv = shift.value().values();
  std::vector<double> mean(lay.c, 0.0), var(lay.c, 0.0), inv_std(lay.c);
  const double m = static_cast<double>(lay.count());
  for (std::size_t ch = 0; ch < lay.c; ++ch)
  {
    double s = 0.0;
    for (std::size_t i = 0; i < lay.n; ++i)
      for (std::size_t k = 0; k < lay.inner; ++k)
        s += xv[lay.index(i, ch, k)];
    mean[ch] = s / m;
    double q = 0.0;
    for (std::size_t i = 0; i < lay.n; ++i)
      for (std::size_t k = 0; k < lay.inner; ++k)
      {
        const double d = xv[lay.index(i, ch, k)] - mean[ch];
        q += d * d;
      }
    var[ch] = q / m;
    inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < lay.n; ++i)
    for (std::size_t ch = 0; ch < lay.c; ++ch)
      for (std::size_t k = 0; k < lay.inner; ++k)
      {
        const auto idx = lay.index(i, ch, k);
        out[idx] = gv[ch] * (xv[idx] - mean[ch]) * inv_std[ch] + bv[ch];
      }
  if (moments)
  {
    moments->mean = Tensor::vector(mean);
    moments->var = Tensor::vector(var);
    moments->count = lay.count();
  }

  Var in[] = {x, scale, shift};
  return x.tape->record(std::move(out), in, [lay, mean, inv_std](const BackwardContext &ctx) {
    const auto xv = ctx.input(0).values();
    const auto gv = ctx.input(1).values();
    const auto go = ctx.out_grad().values();
    const double m = static_cast<double>(lay.count());
    for (std::size_t ch = 0; ch < lay.c; ++ch)
    {
      double sum_go = 0.0, sum_go_xhat = 0.0;
      for (std::size_t i = 0; i < lay.n; ++i)
        for (std::size_t k = 0; k < lay.inner; ++k)
        {
          const auto idx = lay.index(i, ch, k);
          sum_go += go[idx];
          sum_go_xhat += go[idx] * (xv[idx] - mean[ch]) * inv_std[ch];
        }
      if (auto *g = ctx.grad(1))
        (*g)[ch] += sum_go_xhat;
      if (auto *g = ctx.grad(2))
        (*g)[ch] += sum_go;
      if (auto *g = ctx.grad(0))
      {
        const double mg = sum_go / m, mgx = sum_go_xhat / m;
        for (std::size_t i = 0; i < lay.n; ++i)
          for (std::size_t k = 0; k < lay.inner; ++k)
          {
            const auto idx = lay.index(i, ch, k);
            const double xhat = (xv[idx] - mean[ch]) * inv_std[ch];
            (*g)[idx] += gv[ch] * inv_std[ch] * (go[idx] - mg - xhat * mgx);
          }
      }
    }
  });
}

Var batch_norm_eval(Var x, Var scale, Var shift, const Tensor &mean, const Tensor &var, double eps)
{
  const auto lay = channel_layout("batch_norm", x.shape());
  if (scale.shape() != Shape{lay.c} || shift.shape() != Shape{lay.c} || mean.shape() != Shape{lay.c} ||
      var.shape() != Shape{lay.c})
    throw ShapeError("batch_norm", "per-channel tensors must have shape (" + std::to_string(lay.c) + ")");
  std::vector<double> mu(mean.values().begin(), mean.values().end()), inv_std(lay.c);
  for (std::size_t ch = 0; ch < lay.c; ++ch)
    inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);
  const auto xv = x.value().values();
  const auto gv = scale.value().values();
  const auto bv = shift.value().values();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < lay.n; ++i)
    for (std::size_t ch = 0; ch < lay.c; ++ch)
      for (std::size_t k = 0; k < lay.inner; ++k)
      {
        const auto idx = lay.index(i, ch, k);
        out[idx] = gv[ch] * (xv[idx] - mu[ch]) * inv_std[ch] + bv[ch];
      }
  Var in[] = {x, scale, shift};
  return x.tape->record(std::move(out), in, [lay, mu, inv_std](const BackwardContext &ctx) {
    const auto xv = ctx.input(0).values();
    const auto gv = ctx.input(1).values();
    const auto go = ctx.out_grad().values();
    for (std::size_t i = 0; i < lay.n; ++i)
      for (std::size_t ch = 0; ch < lay.c; ++ch)
        for (std::size_t k = 0; k < lay.inner; ++k)
        {
          const auto idx = lay.index(i, ch, k);
          const double xhat = (xv[idx] - mu[ch]) * inv_std[ch];
          if (auto *g = ctx.grad(0))
            (*g)[idx] += go[idx] * gv[ch] * inv_std[ch];
          if (auto *g = ctx.grad(1))
            (*g)[ch] += go[idx] * xhat;
          if (auto *g = ctx.grad(2))
            (*g)[ch] += go[idx];
        }
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels)
{
  const auto &s = logits.shape();
  if (s.size() != 2 || s[0] != labels.size())
    throw ShapeError("softmax_cross_entropy",
                     "logits " + shape_str(s) + " vs " + std::to_string(labels.size()) + " labels");
  const std::size_t m = s[0], k = s[1];
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");

  const auto z = logits.value().values();
  // probabilities are kept for the backward pass
  std::vector<double> prob(m * k);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i)
  {
    const double *zi = z.data() + i * k;
    const double zmax = *std::max_element(zi, zi + k);
    double se = 0.0;
    for (std::size_t j = 0; j < k; ++j)
    {
      prob[i * k + j] = std::exp(zi[j] - zmax);
      se += prob[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j)
      prob[i * k + j] /= se;
    total += (zmax + std::log(se)) - zi[labels[i]];
  }
  std::vector<int> y(labels.begin(), labels.end());
  Var in[] = {logits};
  return logits.tape->record(Tensor::scalar(total / static_cast<double>(m)), in,
                             [m, k, prob = std::move(prob), y = std::move(y)](const BackwardContext &ctx) {
                               if (auto *g = ctx.grad(0))
                               {
                                 const double go = ctx.out_grad()[0] / static_cast<double>(m);
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < k; ++j)
                                   {
                                     const double t = (static_cast<int>(j) == y[i]) ? 1.0 : 0.0;
                                     (*g)[i * k + j] += go * (prob[i * k + j] - t);
                                   }
                               }
                             });
}

} // namespace herolab::ad
