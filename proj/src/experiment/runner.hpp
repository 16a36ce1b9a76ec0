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

#ifndef HERO_LAB_EXPERIMENT_RUNNER_HPP
#define HERO_LAB_EXPERIMENT_RUNNER_HPP

#include "experiment/config.hpp"
#include "quant/quantizer.hpp"
#include "robustness/bounds.hpp"
#include "robustness/diagnostics.hpp"
#include "trainers/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace herolab::experiment
{

// Shortest text that parses back to the same double; locale independent.
std::string format_number(double v);

// Names of the perturbable layers, in parameter order; these label the
// per-layer metric columns for every rule.
std::vector<std::string> layer_names(const models::ModelSpec &spec);

void write_metrics_header(std::ostream &out, std::span<const std::string> layers);
void write_metrics_row(std::ostream &out, std::span<const std::string> layers, const train::EpochMetrics &m);
void write_timing_csv(std::ostream &out, std::span<const train::EpochMetrics> epochs);
void write_sweep_csv(std::ostream &out, std::span<const quant::SweepRow> rows);
void write_bounds_csv(std::ostream &out, std::span<const lab::BoundReport> reports);
void write_contour_csv(std::ostream &out, const lab::ContourGrid &grid);

struct Checkpoint
{
  ExperimentConfig config;
  ParamSet params;
  models::BufferSet buffers;
};

void write_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint read_checkpoint(const std::filesystem::path &path);

inline constexpr const char *metrics_file = "metrics.csv";
inline constexpr const char *metrics_meta_file = "metrics.meta.json";
inline constexpr const char *timing_file = "timing.csv";
inline constexpr const char *checkpoint_file = "checkpoint.bin";
inline constexpr const char *resolved_config_file = "config.resolved.json";
inline constexpr const char *contour_file = "contour.csv";

// Trains and writes metrics.csv (described by metrics.meta.json), timing.csv,
// checkpoint.bin and config.resolved.json (plus contour.csv when requested) into c.output_dir.
train::TrainResult run_train(const ExperimentConfig &c);

// Evaluates on the checkpoint's test set.
std::vector<quant::SweepRow> run_quant_sweep(const Checkpoint &ckpt, std::span<const unsigned> bits);

lab::ContourGrid run_contour(const Checkpoint &ckpt, double half_width, std::size_t steps);

std::string bound_summary(const lab::BoundSweep &sweep);

struct CompareRow
{
  std::string config;
  std::string rule;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double train_acc = 0.0;
  double eval_acc = 0.0;
  std::optional<double> hessian_norm;
  std::vector<quant::SweepRow> sweep; // full precision first
};

// Trains each config unless its output directory already holds a checkpoint
// of the identical config, then sweeps its quantization bits.
std::vector<CompareRow> run_compare(std::span<const std::filesystem::path> configs);
void write_compare_csv(std::ostream &out, std::span<const CompareRow> rows);

} // namespace herolab::experiment

#endif // HERO_LAB_EXPERIMENT_RUNNER_HPP
