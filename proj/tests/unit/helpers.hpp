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

#ifndef HERO_LAB_TESTS_HELPERS_HPP
#define HERO_LAB_TESTS_HELPERS_HPP

#include "core/autodiff.hpp"
#include "core/params.hpp"
#include "core/random.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <vector>

namespace herolab
{
inline void PrintTo(const Tensor &t, std::ostream *os)
{
  *os << shape_str(t.shape()) << " [";
  for (std::size_t i = 0; i < t.size() && i < 16; ++i)
    *os << (i ? ", " : "") << t[i];
  *os << (t.size() > 16 ? ", ...]" : "]");
}
} // namespace herolab

namespace herolab::testing
{

inline Tensor random_tensor(Rng &rng, Shape shape, double scale = 1.0)
{
  Tensor t(std::move(shape));
  for (auto &v : t.values())
    v = scale * rng.normal();
  return t;
}

// L(w) = 1/2 w A w' + b w' for a single (1, d) weight "w".
inline ad::LossFn quadratic_loss(const Tensor &a, const Tensor &b)
{
  return [a, b](ad::Tape &tape, const ad::ParamLeaves &p) {
    auto w = p.at("w");
    auto aw = ad::matmul(w, tape.constant(a)); // (1, d)
    auto quad = ad::scale(ad::sum(ad::mul(aw, w)), 0.5);
    return ad::add(quad, ad::sum(ad::mul(tape.constant(b), w)));
  };
}

inline ParamSet single_weight(const Tensor &w)
{
  ParamSet p;
  p.add("w", w, ParamKind::Weight);
  return p;
}

// Symmetric d x d matrix with N(0,1) entries.
inline Tensor random_symmetric(Rng &rng, std::size_t d)
{
  Tensor a({d, d});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j)
    {
      const double v = rng.normal();
      a[i * d + j] = v;
      a[j * d + i] = v;
    }
  return a;
}

// Central differences of the loss for every trainable entry.
inline GradientSet numeric_grad(const ad::LossFn &fn, const ParamSet &params, double eps = 1e-6)
{
  auto g = GradientSet::zeros_like(params);
  std::size_t k = 0;
  for (std::size_t e = 0; e < params.size(); ++e)
  {
    if (!params[e].trainable)
      continue;
    auto out = g[k++].tensor.values();
    for (std::size_t i = 0; i < out.size(); ++i)
    {
      ParamSet plus = params, minus = params;
      plus[e].tensor[i] += eps;
      minus[e].tensor[i] -= eps;
      out[i] = (ad::forward(fn, plus).loss - ad::forward(fn, minus).loss) / (2 * eps);
    }
  }
  return g;
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir
{
public:
  explicit TempDir(const std::string &tag)
  {
    Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
    _path = std::filesystem::temp_directory_path() / ("herolab-" + tag + "-" + std::to_string(rng.next() % 1000000007));
    std::filesystem::remove_all(_path);
    std::filesystem::create_directories(_path);
  }
  ~TempDir() { std::error_code ec; std::filesystem::remove_all(_path, ec); }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const noexcept { return _path; }
  std::filesystem::path operator/(const std::string &name) const { return _path / name; }

private:
  std::filesystem::path _path;
};

inline void write_bytes(const std::filesystem::path &p, const std::vector<unsigned char> &bytes)
{
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_text(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline double rel_err(double a, double b, double floor = 1e-8)
{
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace herolab::testing

#endif // HERO_LAB_TESTS_HELPERS_HPP
