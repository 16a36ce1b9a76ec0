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

#ifndef HERO_LAB_H
#define HERO_LAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(HERO_LAB_BUILDING)
#define HERO_LAB_API __declspec(dllexport)
#else
#define HERO_LAB_API __declspec(dllimport)
#endif
#else
#define HERO_LAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum HERO_STATUS
{
  HERO_STATUS_OK = 0,
  HERO_STATUS_ERROR = 1, /* anything not covered below */
  HERO_STATUS_CONFIG = 2,
  HERO_STATUS_NUMERICAL = 3,
  HERO_STATUS_IO = 4,
  HERO_STATUS_FORMAT = 5,
  HERO_STATUS_INVALID_ARGUMENT = 6,
  HERO_STATUS_UNEXPECTED_NULL = 7,
} HERO_STATUS;

typedef struct hero_experiment hero_experiment;
typedef struct hero_checkpoint hero_checkpoint;

HERO_LAB_API const char *hero_version(void);

/* Message of the last failed call on this thread; empty after a success. */
HERO_LAB_API const char *hero_last_error(void);

/* Thread cap for kernel parallelism; 0 restores the HERO_LAB_THREADS default. */
HERO_LAB_API void hero_set_threads(size_t n);

HERO_LAB_API HERO_STATUS hero_experiment_load(hero_experiment **experiment, const char *config_path);
/* Relative data paths resolve against base_dir (NULL: working directory). */
HERO_LAB_API HERO_STATUS hero_experiment_parse(hero_experiment **experiment, const char *json_text,
                                               const char *base_dir);
HERO_LAB_API HERO_STATUS hero_experiment_free(hero_experiment *experiment);
HERO_LAB_API HERO_STATUS hero_experiment_set_output_dir(hero_experiment *experiment, const char *dir);

/* Resolved configuration JSON. Writes at most `capacity` bytes including the
   terminator and stores the full length (without terminator) in *length. */
HERO_LAB_API HERO_STATUS hero_experiment_resolved_json(const hero_experiment *experiment, char *buffer,
                                                       size_t capacity, size_t *length);

/* Trains and writes metrics.csv, timing.csv, checkpoint.bin and config.resolved.json. */
HERO_LAB_API HERO_STATUS hero_experiment_train(hero_experiment *experiment);

typedef struct hero_epoch_metrics
{
  size_t epoch;
  double train_loss;
  double train_acc;
  double eval_loss;
  double eval_acc;
  double hessian_norm; /* valid when has_hessian_norm */
  int has_hessian_norm;
  double lr;
} hero_epoch_metrics;

HERO_LAB_API HERO_STATUS hero_experiment_final_metrics(const hero_experiment *experiment, hero_epoch_metrics *out);

HERO_LAB_API HERO_STATUS hero_checkpoint_load(hero_checkpoint **checkpoint, const char *path);
HERO_LAB_API HERO_STATUS hero_checkpoint_free(hero_checkpoint *checkpoint);

/* CSV `bits,eval_loss,eval_acc` with a bits=0 full-precision row first.
   bits == NULL sweeps the bit list stored with the checkpoint. */
HERO_LAB_API HERO_STATUS hero_quant_sweep(const hero_checkpoint *checkpoint, const unsigned *bits, size_t count,
                                          const char *csv_path);

/* CSV `a,b,loss`; steps must be odd. */
HERO_LAB_API HERO_STATUS hero_contour(const hero_checkpoint *checkpoint, double half_width, size_t steps,
                                      const char *csv_path);

typedef struct hero_bound_summary
{
  size_t trials;
  size_t violations_l2;
  size_t violations_linf;
  double median_slack_l2; /* NaN when trials == 0 */
  double median_slack_linf;
} hero_bound_summary;

/* Random quadratic problems checked against the closed-form bounds; csv_path may be NULL. */
HERO_LAB_API HERO_STATUS hero_bound_check(size_t trials, size_t dim_max, uint64_t seed, const char *csv_path,
                                          hero_bound_summary *summary);

HERO_LAB_API HERO_STATUS hero_compare(const char *const *config_paths, size_t count, const char *csv_path);

#ifdef __cplusplus
}
#endif

#endif /* HERO_LAB_H */
