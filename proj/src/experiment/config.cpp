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

#include "experiment/config.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace herolab::experiment
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

// Walks a JSON document and collects every problem instead of stopping at the first.
class Reader
{
public:
  std::vector<std::string> errors;

  // True when j is an object; unknown keys are recorded.
  bool object(const json &j, const std::string &path, std::initializer_list<std::string_view> keys)
  {
    if (!j.is_object())
    {
      errors.push_back(path + ": expected an object");
      return false;
    }
    for (const auto &[k, v] : j.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        errors.push_back(join(path, k) + ": unknown key");
    return true;
  }

  const json *child(const json &obj, std::string_view key) const
  {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  void read(const json &obj, const std::string &path, std::string_view key, double &out)
  {
    if (auto *v = child(obj, key))
    {
      if (v->is_number())
        out = v->get<double>();
      else
        errors.push_back(join(path, key) + ": expected a number");
    }
  }

  template <class U>
    requires std::is_unsigned_v<U>
  void read(const json &obj, const std::string &path, std::string_view key, U &out)
  {
    if (auto *v = child(obj, key))
    {
      if (v->is_number_unsigned() && v->get<std::uint64_t>() <= std::numeric_limits<U>::max())
        out = static_cast<U>(v->get<std::uint64_t>());
      else
        errors.push_back(join(path, key) + ": expected a non-negative integer");
    }
  }

  void read(const json &obj, const std::string &path, std::string_view key, bool &out)
  {
    if (auto *v = child(obj, key))
    {
      if (v->is_boolean())
        out = v->get<bool>();
      else
        errors.push_back(join(path, key) + ": expected true or false");
    }
  }

  void read(const json &obj, const std::string &path, std::string_view key, std::string &out)
  {
    if (auto *v = child(obj, key))
    {
      if (v->is_string())
        out = v->get<std::string>();
      else
        errors.push_back(join(path, key) + ": expected a string");
    }
  }

  template <class U> void read(const json &obj, const std::string &path, std::string_view key, std::vector<U> &out)
  {
    auto *v = child(obj, key);
    if (!v)
      return;
    if (!v->is_array())
    {
      errors.push_back(join(path, key) + ": expected an array of non-negative integers");
      return;
    }
    std::vector<U> tmp;
    for (const auto &e : *v)
    {
      if (!e.is_number_unsigned() || e.get<std::uint64_t>() > std::numeric_limits<U>::max())
      {
        errors.push_back(join(path, key) + ": expected an array of non-negative integers");
        return;
      }
      tmp.push_back(static_cast<U>(e.get<std::uint64_t>()));
    }
    out = std::move(tmp);
  }

  // Enum given as a string, converted by `parse`, which throws on unknown names.
  template <class E, class F>
  void read_enum(const json &obj, const std::string &path, std::string_view key, E &out, F parse)
  {
    std::string s;
    const auto before = errors.size();
    read(obj, path, key, s);
    if (errors.size() != before || !child(obj, key))
      return;
    try
    {
      out = parse(s);
    }
    catch (const Error &)
    {
      errors.push_back(join(path, key) + ": unknown value '" + s + "'");
    }
  }

  static std::string join(const std::string &path, std::string_view key)
  {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }
};

fs::path resolve(const fs::path &p, const fs::path &base)
{
  if (p.empty())
    return p;
  fs::path out = p.is_relative() && !base.empty() ? base / p : p;
  return fs::absolute(out).lexically_normal();
}

Shape synthetic_sample_shape(const SyntheticData &s)
{
  switch (s.kind)
  {
    case data::SyntheticKind::Gaussians:
      return {s.dim};
    case data::SyntheticKind::Spirals:
      return {2};
    case data::SyntheticKind::Glyphs:
      break;
  }
  return {1, 28, 28};
}

} // namespace

std::vector<std::string> ExperimentConfig::violations() const
{
  auto v = model.violations();

  auto trainer = training.trainer;
  trainer.total_steps = 1; // derived from epochs and batch size at train time
  for (auto &m : trainer.violations())
    v.push_back(std::move(m));
  if (training.epochs < 1)
    v.push_back("trainer.epochs: must be >= 1");
  if (training.batch_size < 1)
    v.push_back("trainer.batch_size: must be >= 1");
  if (training.trainer.rule == train::Rule::GradL1 && !(training.trainer.beta > 0.0))
    v.push_back("trainer.beta: must be > 0 for rule 'grad_l1'");

  if (data.source == DataSource::Synthetic)
  {
    const auto &s = data.synthetic;
    if (s.train_count < 1 || s.test_count < 1)
      v.push_back("data.synthetic: train_count and test_count must be >= 1");
    if (s.classes < 2)
      v.push_back("data.synthetic.classes: must be >= 2");
    if (s.classes != model.classes)
      v.push_back("data.synthetic.classes: " + std::to_string(s.classes) + " != model.classes " +
                  std::to_string(model.classes));
    if (s.kind == data::SyntheticKind::Gaussians && s.dim < 1)
      v.push_back("data.synthetic.dim: must be >= 1");
    if (!(s.separation > 0.0))
      v.push_back("data.synthetic.separation: must be > 0");
    if (synthetic_sample_shape(s) != model.input_shape)
      v.push_back("model.input_shape: " + shape_str(model.input_shape) + " does not match synthetic samples " +
                  shape_str(synthetic_sample_shape(s)));
  }
  else
  {
    const auto &i = data.idx;
    for (const auto &[name, p] : {std::pair{"train_images", &i.train_images}, std::pair{"train_labels", &i.train_labels},
                                  std::pair{"test_images", &i.test_images}, std::pair{"test_labels", &i.test_labels}})
      if (p->empty())
        v.push_back(std::string("data.idx.") + name + ": required");
    if (!(i.normalization.std > 0.0))
      v.push_back("data.idx.std: must be > 0");
  }

  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0))
    v.push_back("noise.ratio: must lie in [0, 1]");

  for (unsigned b : quant.bits)
    if (b < quant::min_bits || b > quant::max_bits)
      v.push_back("quant.bits: " + std::to_string(b) + " outside [2, 16]");

  if (!(diagnostics.hessian_h > 0.0))
    v.push_back("diagnostics.hessian_h: must be > 0");
  if (diagnostics.hessian_batch < 1)
    v.push_back("diagnostics.hessian_batch: must be >= 1");
  if (diagnostics.contour.steps != 0 && diagnostics.contour.steps % 2 == 0)
    v.push_back("diagnostics.contour.steps: must be odd (or 0 to skip)");
  if (!(diagnostics.contour.half_width > 0.0))
    v.push_back("diagnostics.contour.half_width: must be > 0");

  if (output_dir.empty())
    v.push_back("output_dir: required");
  return v;
}

void ExperimentConfig::validate() const
{
  auto v = violations();
  if (!v.empty())
    throw ConfigError(std::move(v));
}

ExperimentConfig parse_config(const json &j, const fs::path &base_dir)
{
  Reader r;
  ExperimentConfig c;
  if (!r.object(j, "", {"schema_version", "seed", "output_dir", "model", "data", "noise", "trainer", "quant",
                        "diagnostics"}))
    throw ConfigError(std::move(r.errors));

  if (auto *v = r.child(j, "schema_version"))
  {
    if (!v->is_number_integer() || v->get<std::int64_t>() != schema_version)
      r.errors.push_back("schema_version: expected " + std::to_string(schema_version));
  }
  else
    r.errors.push_back("schema_version: required");

  r.read(j, "", "seed", c.seed);
  std::string out_dir;
  r.read(j, "", "output_dir", out_dir);
  if (!out_dir.empty())
    c.output_dir = out_dir;

  if (auto *m = r.child(j, "model"); m && r.object(*m, "model", {"arch", "widths", "channels", "kernel", "batch_norm",
                                                                  "input_shape", "classes"}))
  {
    r.read_enum(*m, "model", "arch", c.model.arch, models::arch_from_string);
    r.read(*m, "model", "widths", c.model.widths);
    r.read(*m, "model", "channels", c.model.channels);
    r.read(*m, "model", "kernel", c.model.kernel);
    r.read(*m, "model", "batch_norm", c.model.batch_norm);
    r.read(*m, "model", "input_shape", c.model.input_shape);
    // mlp class count follows the last width unless given
    if (c.model.arch == models::Arch::Mlp && !c.model.widths.empty())
      c.model.classes = c.model.widths.back();
    r.read(*m, "model", "classes", c.model.classes);
  }

  if (auto *d = r.child(j, "data"); d && r.object(*d, "data", {"source", "synthetic", "idx"}))
  {
    r.read_enum(*d, "data", "source", c.data.source, [](const std::string &s) {
      if (s == "synthetic")
        return DataSource::Synthetic;
      if (s == "idx")
        return DataSource::Idx;
      throw Error(ErrorCode::Config, s);
    });
    if (auto *s = r.child(*d, "synthetic");
        s && r.object(*s, "data.synthetic", {"kind", "train_count", "test_count", "classes", "dim", "separation"}))
    {
      auto &sy = c.data.synthetic;
      r.read_enum(*s, "data.synthetic", "kind", sy.kind, data::synthetic_kind_from_string);
      r.read(*s, "data.synthetic", "train_count", sy.train_count);
      r.read(*s, "data.synthetic", "test_count", sy.test_count);
      r.read(*s, "data.synthetic", "classes", sy.classes);
      r.read(*s, "data.synthetic", "dim", sy.dim);
      r.read(*s, "data.synthetic", "separation", sy.separation);
    }
    if (auto *s = r.child(*d, "idx"); s && r.object(*s, "data.idx", {"train_images", "train_labels", "test_images",
                                                                      "test_labels", "mean", "std"}))
    {
      auto &ix = c.data.idx;
      std::string p;
      for (auto [key, field] : {std::pair{"train_images", &ix.train_images}, std::pair{"train_labels", &ix.train_labels},
                                std::pair{"test_images", &ix.test_images}, std::pair{"test_labels", &ix.test_labels}})
      {
        p.clear();
        r.read(*s, "data.idx", key, p);
        if (!p.empty())
          *field = resolve(p, base_dir);
      }
      r.read(*s, "data.idx", "mean", ix.normalization.mean);
      r.read(*s, "data.idx", "std", ix.normalization.std);
    }
  }

  if (auto *n = r.child(j, "noise"); n && r.object(*n, "noise", {"ratio"}))
    r.read(*n, "noise", "ratio", c.noise_ratio);

  if (auto *t = r.child(j, "trainer"); t && r.object(*t, "trainer", {"rule", "lr", "momentum", "weight_decay", "gamma",
                                                                      "h", "beta", "perturbation_scaling", "epochs",
                                                                      "batch_size", "flip"}))
  {
    auto &tc = c.training.trainer;
    r.read_enum(*t, "trainer", "rule", tc.rule, train::rule_from_string);
    r.read(*t, "trainer", "lr", tc.lr);
    r.read(*t, "trainer", "momentum", tc.momentum);
    r.read(*t, "trainer", "weight_decay", tc.weight_decay);
    r.read(*t, "trainer", "gamma", tc.gamma);
    r.read(*t, "trainer", "h", tc.h);
    r.read(*t, "trainer", "beta", tc.beta);
    r.read_enum(*t, "trainer", "perturbation_scaling", tc.scaling, train::perturbation_scaling_from_string);
    r.read(*t, "trainer", "epochs", c.training.epochs);
    r.read(*t, "trainer", "batch_size", c.training.batch_size);
    r.read(*t, "trainer", "flip", c.training.flip);
  }

  if (auto *q = r.child(j, "quant"); q && r.object(*q, "quant", {"bits", "range_policy"}))
  {
    r.read(*q, "quant", "bits", c.quant.bits);
    r.read_enum(*q, "quant", "range_policy", c.quant.range, quant::range_policy_from_string);
  }

  if (auto *g = r.child(j, "diagnostics");
      g && r.object(*g, "diagnostics", {"hessian_interval", "hessian_h", "hessian_batch", "contour"}))
  {
    r.read(*g, "diagnostics", "hessian_interval", c.diagnostics.hessian_interval);
    r.read(*g, "diagnostics", "hessian_h", c.diagnostics.hessian_h);
    r.read(*g, "diagnostics", "hessian_batch", c.diagnostics.hessian_batch);
    if (auto *k = r.child(*g, "contour"); k && r.object(*k, "diagnostics.contour", {"half_width", "steps"}))
    {
      r.read(*k, "diagnostics.contour", "half_width", c.diagnostics.contour.half_width);
      r.read(*k, "diagnostics.contour", "steps", c.diagnostics.contour.steps);
    }
  }

  c.output_dir = fs::absolute(c.output_dir).lexically_normal();

  auto errors = std::move(r.errors);
  for (auto &v : c.violations())
    errors.push_back(std::move(v));
  if (!errors.empty())
    throw ConfigError(std::move(errors));
  return c;
}

ExperimentConfig parse_config_text(const std::string &text, const fs::path &base_dir)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  return parse_config(j, base_dir);
}

ExperimentConfig load_config(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), fs::absolute(path).parent_path());
}

json to_json(const ExperimentConfig &c)
{
  const auto &t = c.training.trainer;
  json j;
  j["schema_version"] = schema_version;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["model"] = {{"arch", models::to_string(c.model.arch)},
                {"widths", c.model.widths},
                {"channels", c.model.channels},
                {"kernel", c.model.kernel},
                {"batch_norm", c.model.batch_norm},
                {"input_shape", c.model.input_shape},
                {"classes", c.model.classes}};
  const auto &s = c.data.synthetic;
  const auto &ix = c.data.idx;
  j["data"] = {{"source", c.data.source == DataSource::Synthetic ? "synthetic" : "idx"},
               {"synthetic",
                {{"kind", data::to_string(s.kind)},
                 {"train_count", s.train_count},
                 {"test_count", s.test_count},
                 {"classes", s.classes},
                 {"dim", s.dim},
                 {"separation", s.separation}}},
               {"idx",
                {{"train_images", ix.train_images.string()},
                 {"train_labels", ix.train_labels.string()},
                 {"test_images", ix.test_images.string()},
                 {"test_labels", ix.test_labels.string()},
                 {"mean", ix.normalization.mean},
                 {"std", ix.normalization.std}}}};
  j["noise"] = {{"ratio", c.noise_ratio}};
  j["trainer"] = {{"rule", train::to_string(t.rule)},
                  {"lr", t.lr},
                  {"momentum", t.momentum},
                  {"weight_decay", t.weight_decay},
                  {"gamma", t.gamma},
                  {"h", t.h},
                  {"beta", t.beta},
                  {"perturbation_scaling", train::to_string(t.scaling)},
                  {"epochs", c.training.epochs},
                  {"batch_size", c.training.batch_size},
                  {"flip", c.training.flip}};
  j["quant"] = {{"bits", c.quant.bits}, {"range_policy", quant::to_string(c.quant.range)}};
  j["diagnostics"] = {{"hessian_interval", c.diagnostics.hessian_interval},
                      {"hessian_h", c.diagnostics.hessian_h},
                      {"hessian_batch", c.diagnostics.hessian_batch},
                      {"contour",
                       {{"half_width", c.diagnostics.contour.half_width}, {"steps", c.diagnostics.contour.steps}}}};
  return j;
}

bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) { return to_json(a) == to_json(b); }

std::uint64_t sub_seed(const ExperimentConfig &c, std::string_view name) { return derive_seed(c.seed, name); }

Datasets load_datasets(const ExperimentConfig &c)
{
  c.validate();
  Datasets out;
  if (c.data.source == DataSource::Synthetic)
  {
    const auto &s = c.data.synthetic;
    const auto data_seed = sub_seed(c, "data");
    data::SyntheticSpec spec;
    spec.kind = s.kind;
    spec.classes = s.classes;
    spec.dim = s.dim;
    spec.separation = s.separation;
    spec.family_seed = derive_seed(data_seed, "family");
    spec.count = s.train_count;
    spec.seed = derive_seed(data_seed, "train");
    out.train = data::make_synthetic(spec);
    spec.count = s.test_count;
    spec.seed = derive_seed(data_seed, "test");
    out.test = data::make_synthetic(spec);
  }
  else
  {
    const auto &ix = c.data.idx;
    out.train = data::load_idx(ix.train_images, ix.train_labels, ix.normalization, c.model.classes);
    out.test = data::load_idx(ix.test_images, ix.test_labels, ix.normalization, c.model.classes);
  }
  for (const auto *ds : {&out.train, &out.test})
    if (ds->sample_shape() != c.model.input_shape)
      throw ConfigError({"model.input_shape: " + shape_str(c.model.input_shape) + " does not match data samples " +
                         shape_str(ds->sample_shape())});
  if (c.noise_ratio > 0.0)
    out.train = data::inject_symmetric_noise(out.train, {c.noise_ratio, sub_seed(c, "noise")});
  return out;
}

} // namespace herolab::experiment
