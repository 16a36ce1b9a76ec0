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

#include "hero_lab/hero_lab.h"

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "experiment/config.hpp"
#include "experiment/runner.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <optional>

struct hero_experiment
{
  herolab::experiment::ExperimentConfig config;
  std::optional<herolab::train::EpochMetrics> last;
};

struct hero_checkpoint
{
  herolab::experiment::Checkpoint ckpt;
};

namespace
{

thread_local std::string g_last_error;

HERO_STATUS status_of(herolab::ErrorCode code)
{
  using herolab::ErrorCode;
  switch (code)
  {
    case ErrorCode::Config:
      return HERO_STATUS_CONFIG;
    case ErrorCode::Numerical:
      return HERO_STATUS_NUMERICAL;
    case ErrorCode::Io:
      return HERO_STATUS_IO;
    case ErrorCode::BadMagic:
    case ErrorCode::Truncated:
    case ErrorCode::CountMismatch:
    case ErrorCode::Format:
      return HERO_STATUS_FORMAT;
    case ErrorCode::InvalidArgument:
    case ErrorCode::ShapeMismatch:
      return HERO_STATUS_INVALID_ARGUMENT;
  }
  return HERO_STATUS_ERROR;
}

template <class F> HERO_STATUS guarded(F &&body)
{
  try
  {
    body();
    g_last_error.clear();
    return HERO_STATUS_OK;
  }
  catch (const herolab::Error &e)
  {
    g_last_error = e.what();
    return status_of(e.code());
  }
  catch (const std::bad_alloc &)
  {
    g_last_error = "out of memory";
  }
  catch (const std::exception &e)
  {
    g_last_error = e.what();
  }
  return HERO_STATUS_ERROR;
}

HERO_STATUS null_arg(const char *what)
{
  g_last_error = std::string("unexpected null ") + what;
  return HERO_STATUS_UNEXPECTED_NULL;
}

std::ofstream open_csv(const char *path)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw herolab::Error(herolab::ErrorCode::Io, std::string("cannot write ") + path);
  return f;
}

} // namespace

extern "C" {

const char *hero_version(void) { return "1.0.0"; }

const char *hero_last_error(void) { return g_last_error.c_str(); }

void hero_set_threads(size_t n) { herolab::set_thread_limit(n); }

HERO_STATUS hero_experiment_load(hero_experiment **experiment, const char *config_path)
{
  if (!experiment)
    return null_arg("experiment");
  *experiment = nullptr;
  if (!config_path)
    return null_arg("config_path");
  return guarded([&] { *experiment = new hero_experiment{herolab::experiment::load_config(config_path), {}}; });
}

HERO_STATUS hero_experiment_parse(hero_experiment **experiment, const char *json_text, const char *base_dir)
{
  if (!experiment)
    return null_arg("experiment");
  *experiment = nullptr;
  if (!json_text)
    return null_arg("json_text");
  return guarded([&] {
    *experiment =
      new hero_experiment{herolab::experiment::parse_config_text(json_text, base_dir ? base_dir : ""), {}};
  });
}

HERO_STATUS hero_experiment_free(hero_experiment *experiment)
{
  delete experiment;
  return HERO_STATUS_OK;
}

HERO_STATUS hero_experiment_set_output_dir(hero_experiment *experiment, const char *dir)
{
  if (!experiment)
    return null_arg("experiment");
  if (!dir)
    return null_arg("dir");
  return guarded([&] {
    if (!*dir)
      throw herolab::ConfigError({"output_dir: required"});
    experiment->config.output_dir = std::filesystem::absolute(dir).lexically_normal();
  });
}

HERO_STATUS hero_experiment_resolved_json(const hero_experiment *experiment, char *buffer, size_t capacity,
                                          size_t *length)
{
  if (!experiment)
    return null_arg("experiment");
  return guarded([&] {
    const auto text = herolab::experiment::to_json(experiment->config).dump(2);
    if (length)
      *length = text.size();
    if (buffer && capacity > 0)
    {
      const size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
  });
}

HERO_STATUS hero_experiment_train(hero_experiment *experiment)
{
  if (!experiment)
    return null_arg("experiment");
  return guarded([&] {
    auto result = herolab::experiment::run_train(experiment->config);
    experiment->last = result.epochs.back();
  });
}

HERO_STATUS hero_experiment_final_metrics(const hero_experiment *experiment, hero_epoch_metrics *out)
{
  if (!experiment)
    return null_arg("experiment");
  if (!out)
    return null_arg("out");
  return guarded([&] {
    if (!experiment->last)
      throw herolab::Error(herolab::ErrorCode::InvalidArgument, "experiment has not been trained");
    const auto &m = *experiment->last;
    *out = {m.epoch,     m.train_loss, m.train_acc, m.eval_loss, m.eval_acc, m.hessian_norm.value_or(0.0),
            m.hessian_norm.has_value() ? 1 : 0, m.lr};
  });
}

HERO_STATUS hero_checkpoint_load(hero_checkpoint **checkpoint, const char *path)
{
  if (!checkpoint)
    return null_arg("checkpoint");
  *checkpoint = nullptr;
  if (!path)
    return null_arg("path");
  return guarded([&] { *checkpoint = new hero_checkpoint{herolab::experiment::read_checkpoint(path)}; });
}

HERO_STATUS hero_checkpoint_free(hero_checkpoint *checkpoint)
{
  delete checkpoint;
  return HERO_STATUS_OK;
}

HERO_STATUS hero_quant_sweep(const hero_checkpoint *checkpoint, const unsigned *bits, size_t count,
                             const char *csv_path)
{
  if (!checkpoint)
    return null_arg("checkpoint");
  if (!csv_path)
    return null_arg("csv_path");
  return guarded([&] {
    const auto &stored = checkpoint->ckpt.config.quant.bits;
    const auto rows = bits ? herolab::experiment::run_quant_sweep(checkpoint->ckpt, {bits, count})
                           : herolab::experiment::run_quant_sweep(checkpoint->ckpt, stored);
    auto f = open_csv(csv_path);
    herolab::experiment::write_sweep_csv(f, rows);
  });
}

HERO_STATUS hero_contour(const hero_checkpoint *checkpoint, double half_width, size_t steps, const char *csv_path)
{
  if (!checkpoint)
    return null_arg("checkpoint");
  if (!csv_path)
    return null_arg("csv_path");
  return guarded([&] {
    const auto grid = herolab::experiment::run_contour(checkpoint->ckpt, half_width, steps);
    auto f = open_csv(csv_path);
    herolab::experiment::write_contour_csv(f, grid);
  });
}

HERO_STATUS hero_bound_check(size_t trials, size_t dim_max, uint64_t seed, const char *csv_path,
                             hero_bound_summary *summary)
{
  return guarded([&] {
    const auto sweep = herolab::lab::bound_sweep(trials, dim_max, seed);
    if (csv_path)
    {
      auto f = open_csv(csv_path);
      herolab::experiment::write_bounds_csv(f, sweep.reports);
    }
    if (summary)
      *summary = {sweep.reports.size(), sweep.violations_l2, sweep.violations_linf, sweep.median_slack_l2,
                  sweep.median_slack_linf};
  });
}

HERO_STATUS hero_compare(const char *const *config_paths, size_t count, const char *csv_path)
{
  if (!config_paths && count)
    return null_arg("config_paths");
  if (!csv_path)
    return null_arg("csv_path");
  return guarded([&] {
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i)
    {
      if (!config_paths[i])
        throw herolab::Error(herolab::ErrorCode::InvalidArgument, "null config path");
      paths.emplace_back(config_paths[i]);
    }
    const auto rows = herolab::experiment::run_compare(paths);
    auto f = open_csv(csv_path);
    herolab::experiment::write_compare_csv(f, rows);
  });
}

} // extern "C"
