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

#include "helpers.hpp"

#include "core/error.hpp"
#include "experiment/config.hpp"
#include "experiment/runner.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace herolab;
using namespace herolab::experiment;
namespace ht = herolab::testing;

namespace
{

const char *tiny_config = R"({
  "schema_version": 1, "seed": 3,
  "model": {"arch": "mlp", "widths": [2, 8, 3], "input_shape": [2]},
  "data": {"source": "synthetic",
           "synthetic": {"kind": "gaussians", "train_count": 60, "test_count": 30, "classes": 3}},
  "trainer": {"rule": "hero", "epochs": 2, "batch_size": 16, "perturbation_scaling": "elementwise"},
  "quant": {"bits": [2, 8]},
  "diagnostics": {"hessian_interval": 1, "hessian_batch": 20}
})";

std::vector<std::string> violations_of(const std::string &text)
{
  try
  {
    parse_config_text(text);
  }
  catch (const ConfigError &e)
  {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string> &v, const std::string &needle)
{
  return std::any_of(v.begin(), v.end(), [&](const std::string &s) { return s.find(needle) != std::string::npos; });
}

} // namespace

TEST(Config, DefaultsAndRoundTrip)
{
  auto c = parse_config_text(R"({"schema_version": 1})");
  EXPECT_EQ(c.training.trainer.rule, train::Rule::Sgd);
  EXPECT_EQ(c.training.epochs, 30u);
  EXPECT_EQ(c.training.trainer.h, 0.5);
  EXPECT_EQ(c.data.synthetic.kind, data::SyntheticKind::Glyphs);
  EXPECT_TRUE(c.output_dir.is_absolute());

  auto t = parse_config_text(tiny_config);
  EXPECT_EQ(t.training.trainer.rule, train::Rule::Hero);
  EXPECT_EQ(t.model.classes, 3u);
  EXPECT_EQ(t.quant.bits, (std::vector<unsigned>{2, 8}));
  auto back = parse_config(to_json(t));
  EXPECT_TRUE(back == t);
  EXPECT_EQ(to_json(back).dump(), to_json(t).dump());
}

TEST(Config, SchemaVersionIsRequired)
{
  EXPECT_TRUE(mentions(violations_of("{}"), "schema_version"));
  EXPECT_TRUE(mentions(violations_of(R"({"schema_version": 2})"), "schema_version"));
  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
}

TEST(Config, UnknownKeysAndEveryViolationListed)
{
  auto v = violations_of(R"({"schema_version": 1, "bogus": 1,
    "trainer": {"rule": "hero", "h": 0, "lr": -1, "extra": true},
    "model": {"arch": "mlp", "widths": "wide"},
    "noise": {"ratio": 2}})");
  EXPECT_TRUE(mentions(v, "bogus"));
  EXPECT_TRUE(mentions(v, "trainer.extra"));
  EXPECT_TRUE(mentions(v, "trainer.h"));
  EXPECT_TRUE(mentions(v, "trainer.lr"));
  EXPECT_TRUE(mentions(v, "model.widths"));
  EXPECT_TRUE(mentions(v, "noise.ratio"));
  EXPECT_GE(v.size(), 6u);
}

TEST(Config, ZeroHNamesTheField)
{
  auto v = violations_of(R"({"schema_version": 1, "trainer": {"rule": "first_order", "h": 0}})");
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "trainer.h"));
  // sgd does not use h
  EXPECT_TRUE(violations_of(R"({"schema_version": 1, "trainer": {"rule": "sgd", "h": 0}})").empty());
}

TEST(Config, CrossFieldChecks)
{
  EXPECT_TRUE(mentions(violations_of(R"({"schema_version": 1, "trainer": {"rule": "grad_l1"}})"), "trainer.beta"));
  EXPECT_TRUE(mentions(violations_of(R"({"schema_version": 1, "quant": {"bits": [1, 17]}})"), "quant.bits"));
  EXPECT_TRUE(mentions(violations_of(R"({"schema_version": 1, "diagnostics": {"contour": {"steps": 4}}})"),
                       "contour.steps"));
  EXPECT_TRUE(mentions(violations_of(R"({"schema_version": 1, "data": {"source": "idx"}})"), "data.idx"));
  EXPECT_TRUE(mentions(violations_of(R"({"schema_version": 1, "trainer": {"rule": "adam"}})"), "trainer.rule"));
}

TEST(Config, SubSeedsAreNamedAndStable)
{
  auto c = parse_config_text(tiny_config);
  EXPECT_EQ(sub_seed(c, "data"), derive_seed(3, "data"));
  EXPECT_NE(sub_seed(c, "data"), sub_seed(c, "noise"));
  auto a = load_datasets(c), b = load_datasets(c);
  EXPECT_EQ(a.train.inputs, b.train.inputs);
  EXPECT_EQ(a.train.size(), 60u);
  EXPECT_EQ(a.test.size(), 30u);
  EXPECT_NE(a.train.inputs, a.test.inputs);
}

TEST(Config, NoiseOnlyTouchesTrainLabels)
{
  auto clean = parse_config_text(tiny_config);
  auto noisy = clean;
  noisy.noise_ratio = 0.5;
  auto a = load_datasets(clean), b = load_datasets(noisy);
  EXPECT_EQ(a.train.inputs, b.train.inputs);
  EXPECT_NE(a.train.labels, b.train.labels);
  EXPECT_EQ(a.test.labels, b.test.labels);
}

TEST(Config, IdxPathsResolveAgainstBaseDir)
{
  ht::TempDir dir("cfg-idx");
  auto ds = data::make_synthetic({.kind = data::SyntheticKind::Glyphs, .count = 20, .classes = 10, .seed = 1});
  data::export_idx(ds, dir / "tr-img", dir / "tr-lab");
  data::export_idx(ds, dir / "te-img", dir / "te-lab");
  std::ofstream(dir / "c.json") << R"({"schema_version": 1, "data": {"source": "idx", "idx": {
      "train_images": "tr-img", "train_labels": "tr-lab", "test_images": "te-img", "test_labels": "te-lab",
      "mean": 0, "std": 1}}})";
  auto c = load_config(dir / "c.json");
  EXPECT_EQ(c.data.idx.train_images, dir / "tr-img");
  auto d = load_datasets(c);
  EXPECT_EQ(d.train.inputs.values()[100], ds.inputs.values()[100]);
  EXPECT_THROW(load_config(dir / "missing.json"), Error);
}

TEST(Output, NumbersRoundTrip)
{
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0})
  {
    auto s = format_number(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(2.0), "2");
}

TEST(Output, MetricsCsvLayout)
{
  models::ModelSpec spec;
  auto layers = layer_names(spec);
  EXPECT_EQ(layers, (std::vector<std::string>{"fc0.weight", "fc1.weight"}));
  std::ostringstream out;
  write_metrics_header(out, layers);
  train::EpochMetrics m;
  m.epoch = 1;
  m.train_loss = 0.5;
  m.lr = 0.25;
  write_metrics_row(out, layers, m);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "epoch,train_loss,train_acc,eval_loss,eval_acc,hessian_norm,regularizer,lr,"
                    "z_norm:fc0.weight,z_norm:fc1.weight,G:fc0.weight,G:fc1.weight");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
  EXPECT_EQ(row.substr(0, 6), "1,0.5,");
  EXPECT_EQ(header.find("wall"), std::string::npos);
}

TEST(Checkpoint, RoundTripAndErrors)
{
  ht::TempDir dir("ckpt");
  Checkpoint ck;
  ck.config = parse_config_text(R"({"schema_version": 1, "model": {"arch": "smallconv", "batch_norm": true}})");
  ck.params = models::build(ck.config.model, 4);
  ck.buffers = models::initial_buffers(ck.config.model);
  ck.buffers[0].mean[1] = 0.75;
  ck.params[1].trainable = false;
  write_checkpoint(dir / "a.bin", ck);
  auto back = read_checkpoint(dir / "a.bin");
  EXPECT_TRUE(back.params == ck.params);
  EXPECT_EQ(back.buffers, ck.buffers);
  EXPECT_TRUE(back.config == ck.config);
  EXPECT_FALSE(back.params[1].trainable);

  const auto bytes = ht::read_text(dir / "a.bin");
  EXPECT_EQ(bytes.substr(0, 8), "HEROCKPT");
  auto write = [&](const std::string &name, const std::string &s) {
    std::ofstream(dir / name, std::ios::binary) << s;
    return dir / name;
  };
  auto code = [](const std::filesystem::path &p) {
    try
    {
      read_checkpoint(p);
    }
    catch (const Error &e)
    {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code(write("trunc.bin", bytes.substr(0, bytes.size() / 2))), ErrorCode::Truncated);
  EXPECT_EQ(code(write("magic.bin", "NOTACKPT" + bytes.substr(8))), ErrorCode::BadMagic);
  EXPECT_EQ(code(write("trail.bin", bytes + "x")), ErrorCode::Format);
  EXPECT_EQ(code(dir / "nothing.bin"), ErrorCode::Io);
  auto bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_EQ(code(write("ver.bin", bad_version)), ErrorCode::Format);
}

TEST(Runner, TrainWritesDeterministicArtifacts)
{
  ht::TempDir dir("run");
  auto c = parse_config_text(tiny_config);
  c.output_dir = dir / "a";
  run_train(c);
  c.output_dir = dir / "b";
  auto res = run_train(c);
  for (const char *f : {metrics_file, timing_file, checkpoint_file, resolved_config_file})
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
  EXPECT_EQ(ht::read_text(dir / "a" / metrics_file), ht::read_text(dir / "b" / metrics_file));
  EXPECT_FALSE(std::filesystem::exists(dir / "a" / contour_file));

  auto ck = read_checkpoint(dir / "b" / checkpoint_file);
  EXPECT_TRUE(ck.params == res.params);
  EXPECT_EQ(load_config(dir / "b" / resolved_config_file).training.trainer.rule, train::Rule::Hero);

  const unsigned bits[] = {2, 8};
  auto rows = run_quant_sweep(ck, bits);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].eval_acc, res.epochs.back().eval_acc);
  auto grid = run_contour(ck, 0.5, 3);
  EXPECT_EQ(grid.at(1, 1), res.epochs.back().eval_loss);
}

TEST(Runner, MetricsMetadataCoversEveryColumn)
{
  ht::TempDir dir("meta");
  auto c = parse_config_text(tiny_config);
  c.output_dir = dir.path();
  run_train(c);
  auto meta = nlohmann::json::parse(ht::read_text(dir / metrics_meta_file));
  std::istringstream header(ht::read_text(dir / metrics_file).substr(0, ht::read_text(dir / metrics_file).find('\n')));
  std::string col;
  while (std::getline(header, col, ',')) {
    if (col == "epoch")
      continue;
    auto colon = col.find(':');
    const std::string key = colon == std::string::npos ? col : col.substr(0, colon) + ":<layer>";
    EXPECT_TRUE(meta["columns"].contains(key)) << col;
  }
  EXPECT_EQ(meta["hessian_norm"]["dataset"], "train");
  EXPECT_EQ(meta["hessian_norm"]["h"].get<double>(), c.diagnostics.hessian_h);
}

TEST(Runner, CompareReusesMatchingCheckpoint)
{
  ht::TempDir dir("cmp");
  auto c = parse_config_text(tiny_config);
  c.output_dir = dir / "run";
  std::ofstream(dir / "c.json") << to_json(c).dump();
  const std::filesystem::path paths[] = {dir / "c.json"};
  auto first = run_compare(paths);
  const auto stamp = std::filesystem::last_write_time(dir / "run" / checkpoint_file);
  auto second = run_compare(paths);
  EXPECT_EQ(std::filesystem::last_write_time(dir / "run" / checkpoint_file), stamp);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].eval_acc, second[0].eval_acc);
  EXPECT_EQ(first[0].rule, "hero");
  EXPECT_EQ(first[0].sweep.size(), 3u);
  ASSERT_TRUE(first[0].hessian_norm.has_value());

  std::ostringstream out;
  write_compare_csv(out, first);
  EXPECT_EQ(out.str().substr(0, 7), "config,");
}
