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

#include "data/dataset.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace herolab::data
{

namespace
{

using std::numbers::pi;

LabeledDataset make_gaussians(const SyntheticSpec &spec)
{
  if (spec.dim < 2)
    throw Error(ErrorCode::InvalidArgument, "gaussians need dim >= 2");
  // means on a circle in the first two coordinates, adjacent means `separation` apart
  const double radius = spec.separation / (2.0 * std::sin(pi / static_cast<double>(spec.classes)));
  Rng rng(spec.seed);
  std::vector<double> x(spec.count * spec.dim);
  std::vector<int> y(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i)
  {
    const auto k = i % spec.classes;
    const double angle = 2.0 * pi * static_cast<double>(k) / static_cast<double>(spec.classes);
    for (std::size_t j = 0; j < spec.dim; ++j)
      x[i * spec.dim + j] = rng.normal();
    x[i * spec.dim] += radius * std::cos(angle);
    x[i * spec.dim + 1] += radius * std::sin(angle);
    y[i] = static_cast<int>(k);
  }
  return {Tensor(Shape{spec.count, spec.dim}, std::move(x)), std::move(y), spec.classes};
}

LabeledDataset make_spirals(const SyntheticSpec &spec)
{
  Rng rng(spec.seed);
  std::vector<double> x(spec.count * 2);
  std::vector<int> y(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i)
  {
    const auto k = i % spec.classes;
    const double t = rng.uniform();
    const double theta = 3.0 * pi * t + 2.0 * pi * static_cast<double>(k) / static_cast<double>(spec.classes);
    const double r = 0.2 + 0.8 * t;
    x[2 * i] = r * std::cos(theta) + 0.03 * rng.normal();
    x[2 * i + 1] = r * std::sin(theta) + 0.03 * rng.normal();
    y[i] = static_cast<int>(k);
  }
  return {Tensor(Shape{spec.count, 2}, std::move(x)), std::move(y), spec.classes};
}

// ---- glyphs: 28x28 stroke images, one stroke prototype set per class ----

constexpr std::size_t glyph_side = 28;
constexpr std::size_t strokes_per_glyph = 3;
constexpr std::size_t curve_samples = 16;

struct Point
{
  double x, y;
};

using Stroke = std::array<Point, 3>; // quadratic Bezier control points
using Glyph = std::array<Stroke, strokes_per_glyph>;

Glyph make_prototype(Rng &rng)
{
  Glyph g;
  for (auto &stroke : g)
    for (auto &p : stroke)
      p = {rng.uniform(6.0, 22.0), rng.uniform(6.0, 22.0)};
  return g;
}

double segment_distance(Point p, Point a, Point b)
{
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

void draw_stroke(std::vector<double> &img, const Stroke &s, double thickness, double intensity)
{
  std::array<Point, curve_samples + 1> pts;
  for (std::size_t i = 0; i <= curve_samples; ++i)
  {
    const double t = static_cast<double>(i) / curve_samples, u = 1.0 - t;
    pts[i] = {u * u * s[0].x + 2 * u * t * s[1].x + t * t * s[2].x, u * u * s[0].y + 2 * u * t * s[1].y + t * t * s[2].y};
  }
  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (auto p : pts)
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  const double pad = thickness + 1.0;
  const auto lo_r = static_cast<long>(std::max(0.0, std::floor(y0 - pad)));
  const auto hi_r = static_cast<long>(std::min<double>(glyph_side - 1, std::ceil(y1 + pad)));
  const auto lo_c = static_cast<long>(std::max(0.0, std::floor(x0 - pad)));
  const auto hi_c = static_cast<long>(std::min<double>(glyph_side - 1, std::ceil(x1 + pad)));
  for (long r = lo_r; r <= hi_r; ++r)
    for (long c = lo_c; c <= hi_c; ++c)
    {
      const Point p{static_cast<double>(c), static_cast<double>(r)};
      double d = 1e9;
      for (std::size_t i = 0; i < curve_samples; ++i)
        d = std::min(d, segment_distance(p, pts[i], pts[i + 1]));
      const double v = intensity * std::clamp(thickness + 0.5 - d, 0.0, 1.0);
      auto &px = img[static_cast<std::size_t>(r) * glyph_side + static_cast<std::size_t>(c)];
      px = std::max(px, v);
    }
}

LabeledDataset make_glyphs(const SyntheticSpec &spec)
{
  Rng proto_rng(derive_seed(spec.family_seed, "glyph-prototypes"));
  std::vector<Glyph> prototypes(spec.classes);
  for (auto &g : prototypes)
    g = make_prototype(proto_rng);

  Rng rng(spec.seed);
  const std::size_t area = glyph_side * glyph_side;
  std::vector<double> x(spec.count * area);
  std::vector<int> y(spec.count);
  std::vector<double> img(area);
  const double centre = (glyph_side - 1) / 2.0;
  for (std::size_t i = 0; i < spec.count; ++i)
  {
    const auto k = i % spec.classes;
    std::fill(img.begin(), img.end(), 0.0);

    const double angle = rng.uniform(-0.3, 0.3);
    const double scale = rng.uniform(0.8, 1.2);
    const double tx = rng.uniform(-3.0, 3.0), ty = rng.uniform(-3.0, 3.0);
    const double thickness = rng.uniform(0.6, 1.6);
    const double intensity = rng.uniform(0.6, 1.0);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (const auto &proto : prototypes[k])
    {
      Stroke s;
      for (std::size_t j = 0; j < 3; ++j)
      {
        const double px = proto[j].x + 1.5 * rng.normal() - centre;
        const double py = proto[j].y + 1.5 * rng.normal() - centre;
        s[j] = {centre + scale * (ca * px - sa * py) + tx, centre + scale * (sa * px + ca * py) + ty};
      }
      // occasionally a stroke is missing
      if (rng.uniform() < 0.1)
        continue;
      draw_stroke(img, s, thickness, intensity);
    }
    if (rng.uniform() < 0.5)
    {
      Stroke clutter;
      for (auto &p : clutter)
        p = {rng.uniform(2.0, 26.0), rng.uniform(2.0, 26.0)};
      draw_stroke(img, clutter, 0.6, rng.uniform(0.3, 0.7));
    }
    for (std::size_t p = 0; p < area; ++p)
    {
      const double v = std::clamp(img[p] + 0.1 * rng.normal(), 0.0, 1.0);
      x[i * area + p] = std::round(v * 255.0) / 255.0; // byte grid, so IDX export is lossless
    }
    y[i] = static_cast<int>(k);
  }
  return {Tensor(Shape{spec.count, 1, glyph_side, glyph_side}, std::move(x)), std::move(y), spec.classes};
}

} // namespace

LabeledDataset make_synthetic(const SyntheticSpec &spec)
{
  if (spec.classes < 2 || spec.count < spec.classes)
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs N >= K >= 2");
  switch (spec.kind)
  {
    case SyntheticKind::Gaussians:
      return make_gaussians(spec);
    case SyntheticKind::Spirals:
      return make_spirals(spec);
    case SyntheticKind::Glyphs:
      if (spec.classes > 255)
        throw Error(ErrorCode::InvalidArgument, "glyphs support at most 255 classes");
      return make_glyphs(spec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown synthetic kind");
}

} // namespace herolab::data
