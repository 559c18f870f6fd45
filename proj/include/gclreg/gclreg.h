/**
 * Copyright 2026 The gclreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GCLREG_GCLREG_H_
#define GCLREG_GCLREG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(GCLREG_BUILDING)
#define GCLREG_API __declspec(dllexport)
#else
#define GCLREG_API __declspec(dllimport)
#endif
#else
#define GCLREG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gclreg_status {
  GCLREG_OK = 0,
  GCLREG_INVALID_ARGUMENT = 1, /* null handle, bad index, malformed call */
  GCLREG_CONFIG = 2,           /* configuration rejected */
  GCLREG_PARSE = 3,            /* malformed input document or file */
  GCLREG_VALIDATION = 4,       /* input parsed but violates an invariant */
  GCLREG_IO = 5,
  GCLREG_RUNTIME = 6
} gclreg_status;

/* Library version, e.g. "0.1.0". */
GCLREG_API const char* gclreg_version(void);

/* Message for the last failed call on this thread; "" if none. The pointer
 * stays valid until the next call on the same thread. */
GCLREG_API const char* gclreg_last_error(void);

GCLREG_API const char* gclreg_status_name(gclreg_status status);

/* Progress sink, called once per finished line of output. */
typedef void (*gclreg_progress_fn)(const char* line, void* user);

/* ---- experiments ---- */

typedef struct gclreg_experiment gclreg_experiment;

GCLREG_API gclreg_status gclreg_experiment_load(const char* config_path, gclreg_experiment** out);
/* Relative paths inside the document resolve against base_dir. */
GCLREG_API gclreg_status gclreg_experiment_parse(const char* json_text, const char* base_dir,
                                                 gclreg_experiment** out);
GCLREG_API void gclreg_experiment_free(gclreg_experiment* exp);

/* Output directory as configured, after the GCLREG_OUTPUT_ROOT override. */
GCLREG_API const char* gclreg_experiment_output_dir(const gclreg_experiment* exp);
GCLREG_API gclreg_status gclreg_experiment_set_output_dir(gclreg_experiment* exp, const char* dir);
GCLREG_API void gclreg_experiment_set_progress(gclreg_experiment* exp, gclreg_progress_fn fn, void* user);

GCLREG_API size_t gclreg_experiment_num_strategies(const gclreg_experiment* exp);
GCLREG_API size_t gclreg_experiment_num_seeds(const gclreg_experiment* exp);

/* Runs the strategy x seed grid and writes the run directory. */
GCLREG_API gclreg_status gclreg_experiment_run(gclreg_experiment* exp);

/* param is one of "lambda", "M", "ema_beta", "gamma". */
GCLREG_API gclreg_status gclreg_experiment_sweep(gclreg_experiment* exp, const char* param, const double* values,
                                                 size_t num_values);

/* Rows of the most recent run or sweep. af_final is NaN when undefined. */
GCLREG_API size_t gclreg_experiment_num_results(const gclreg_experiment* exp);
GCLREG_API gclreg_status gclreg_experiment_result(const gclreg_experiment* exp, size_t index, const char** strategy,
                                                  uint64_t* seed, double* ap_final, double* af_final);

/* ---- graphs ---- */

typedef struct gclreg_graph gclreg_graph;

typedef struct gclreg_sbm_params {
  int num_classes;
  int nodes_per_class;
  int feature_dim;
  double p_in;
  double p_out;
  double mean_scale;
  uint64_t seed;
} gclreg_sbm_params;

GCLREG_API void gclreg_sbm_defaults(gclreg_sbm_params* params);
GCLREG_API gclreg_status gclreg_graph_generate_sbm(const gclreg_sbm_params* params, gclreg_graph** out);
GCLREG_API gclreg_status gclreg_graph_load(const char* node_file, const char* edge_file, gclreg_graph** out);
GCLREG_API gclreg_status gclreg_graph_save(const gclreg_graph* graph, const char* node_file, const char* edge_file);
GCLREG_API void gclreg_graph_free(gclreg_graph* graph);

GCLREG_API int gclreg_graph_num_nodes(const gclreg_graph* graph);
GCLREG_API int gclreg_graph_num_edges(const gclreg_graph* graph);
GCLREG_API int gclreg_graph_feature_dim(const gclreg_graph* graph);
GCLREG_API int gclreg_graph_label(const gclreg_graph* graph, int node);

/* Number of tasks a class-incremental split of the graph would produce. */
GCLREG_API gclreg_status gclreg_graph_num_tasks(const gclreg_graph* graph, int classes_per_task, int* out);

/* ---- metrics ----
 * matrix is T x T row-major; entry [t][i] is used only for i <= t.
 * t is 1-based. */

GCLREG_API gclreg_status gclreg_average_performance(const double* matrix, int num_tasks, int t, double* out);
/* Writes NaN when t == 1. */
GCLREG_API gclreg_status gclreg_average_forgetting(const double* matrix, int num_tasks, int t, double* out);

/* ---- checkpoints ---- */

GCLREG_API gclreg_status gclreg_checkpoint_shape(const char* path, int* input_dim, int* hidden_dim, int* num_classes);

#ifdef __cplusplus
}
#endif

#endif /* GCLREG_GCLREG_H_ */
