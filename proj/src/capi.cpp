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

#include "gclreg/gclreg.h"

#include <cmath>
#include <limits>
#include <new>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "experiment.hpp"
#include "metrics_report.hpp"

struct gclreg_experiment {
  gclreg::ExperimentConfig config;
  std::string output_dir;
  gclreg_progress_fn progress = nullptr;
  void* progress_user = nullptr;
  std::vector<gclreg::ResultRow> results;
};

struct gclreg_graph {
  gclreg::RawGraph raw;
};

namespace {

thread_local std::string g_last_error;

gclreg_status set_error(gclreg_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

gclreg_status status_of(gclreg::ErrorKind kind) {
  switch (kind) {
    case gclreg::ErrorKind::kParse:
      return GCLREG_PARSE;
    case gclreg::ErrorKind::kValidation:
      return GCLREG_VALIDATION;
    case gclreg::ErrorKind::kConfig:
      return GCLREG_CONFIG;
    case gclreg::ErrorKind::kIo:
      return GCLREG_IO;
    case gclreg::ErrorKind::kShape:
    case gclreg::ErrorKind::kSize:
      return GCLREG_RUNTIME;
  }
  return GCLREG_RUNTIME;
}

template <typename F>
gclreg_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return GCLREG_OK;
  } catch (const gclreg::Error& e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(GCLREG_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return set_error(GCLREG_RUNTIME, e.what());
  } catch (...) {
    return set_error(GCLREG_RUNTIME, "unknown error");
  }
}

// Forwards complete lines to the user's callback.
class CallbackBuf : public std::stringbuf {
 public:
  CallbackBuf(gclreg_progress_fn fn, void* user) : fn_(fn), user_(user) {}
  ~CallbackBuf() override { flush_lines(true); }

 protected:
  int sync() override {
    flush_lines(false);
    return 0;
  }
  int_type overflow(int_type ch) override {
    const int_type r = std::stringbuf::overflow(ch);
    if (ch == '\n') flush_lines(false);
    return r;
  }

 private:
  void flush_lines(bool all) {
    std::string text = str();
    std::size_t start = 0;
    for (std::size_t nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', start)) {
      fn_(text.substr(start, nl - start).c_str(), user_);
      start = nl + 1;
    }
    if (all && start < text.size()) {
      fn_(text.substr(start).c_str(), user_);
      start = text.size();
    }
    str(text.substr(start));
  }
  gclreg_progress_fn fn_;
  void* user_;
};

gclreg_experiment* wrap(gclreg::ExperimentConfig cfg) {
  auto* exp = new gclreg_experiment;
  exp->output_dir = gclreg::resolve_output_dir(cfg).string();
  exp->config = std::move(cfg);
  return exp;
}

gclreg::AccuracyMatrix matrix_from(const double* values, int num_tasks, int t) {
  if (values == nullptr) gclreg::fail(gclreg::ErrorKind::kConfig, "matrix is null");
  if (t < 1 || t > num_tasks) gclreg::fail(gclreg::ErrorKind::kConfig, "t outside 1..num_tasks");
  gclreg::AccuracyMatrix m(num_tasks);
  for (int r = 1; r <= t; ++r) {
    const double* row = values + static_cast<std::ptrdiff_t>(r - 1) * num_tasks;
    m.set_row(r, std::vector<double>(row, row + r));
  }
  return m;
}

}  // namespace

extern "C" {

const char* gclreg_version(void) { return "0.1.0"; }

const char* gclreg_last_error(void) { return g_last_error.c_str(); }

const char* gclreg_status_name(gclreg_status status) {
  switch (status) {
    case GCLREG_OK:
      return "ok";
    case GCLREG_INVALID_ARGUMENT:
      return "invalid argument";
    case GCLREG_CONFIG:
      return "config error";
    case GCLREG_PARSE:
      return "parse error";
    case GCLREG_VALIDATION:
      return "validation error";
    case GCLREG_IO:
      return "i/o error";
    case GCLREG_RUNTIME:
      return "runtime error";
  }
  return "unknown status";
}

gclreg_status gclreg_experiment_load(const char* config_path, gclreg_experiment** out) {
  if (config_path == nullptr || out == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = wrap(gclreg::load_config(config_path)); });
}

gclreg_status gclreg_experiment_parse(const char* json_text, const char* base_dir, gclreg_experiment** out) {
  if (json_text == nullptr || out == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = wrap(gclreg::parse_config(json_text, base_dir != nullptr ? base_dir : ".")); });
}

void gclreg_experiment_free(gclreg_experiment* exp) { delete exp; }

const char* gclreg_experiment_output_dir(const gclreg_experiment* exp) {
  return exp != nullptr ? exp->output_dir.c_str() : "";
}

gclreg_status gclreg_experiment_set_output_dir(gclreg_experiment* exp, const char* dir) {
  if (exp == nullptr || dir == nullptr || *dir == '\0') return set_error(GCLREG_INVALID_ARGUMENT, "null or empty argument");
  exp->output_dir = dir;
  return GCLREG_OK;
}

void gclreg_experiment_set_progress(gclreg_experiment* exp, gclreg_progress_fn fn, void* user) {
  if (exp == nullptr) return;
  exp->progress = fn;
  exp->progress_user = user;
}

size_t gclreg_experiment_num_strategies(const gclreg_experiment* exp) {
  return exp != nullptr ? exp->config.strategies.size() : 0;
}

size_t gclreg_experiment_num_seeds(const gclreg_experiment* exp) { return exp != nullptr ? exp->config.seeds.size() : 0; }

gclreg_status gclreg_experiment_run(gclreg_experiment* exp) {
  if (exp == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null experiment");
  return guarded([&] {
    exp->results.clear();
    if (exp->progress != nullptr) {
      CallbackBuf buf(exp->progress, exp->progress_user);
      std::ostream sink(&buf);
      exp->results = gclreg::run_experiment(exp->config, exp->output_dir, &sink);
    } else {
      exp->results = gclreg::run_experiment(exp->config, exp->output_dir, nullptr);
    }
  });
}

gclreg_status gclreg_experiment_sweep(gclreg_experiment* exp, const char* param, const double* values,
                                      size_t num_values) {
  if (exp == nullptr || param == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  if (num_values > 0 && values == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "values is null");
  return guarded([&] {
    exp->results.clear();
    const gclreg::SweepParam p = gclreg::parse_sweep_param(param);
    std::vector<double> vs(values, values + num_values);
    std::vector<gclreg::SweepRow> rows;
    if (exp->progress != nullptr) {
      CallbackBuf buf(exp->progress, exp->progress_user);
      std::ostream sink(&buf);
      rows = gclreg::run_sweep(exp->config, p, vs, exp->output_dir, &sink);
    } else {
      rows = gclreg::run_sweep(exp->config, p, vs, exp->output_dir, nullptr);
    }
    for (auto& r : rows) exp->results.push_back(std::move(r.result));
  });
}

size_t gclreg_experiment_num_results(const gclreg_experiment* exp) { return exp != nullptr ? exp->results.size() : 0; }

gclreg_status gclreg_experiment_result(const gclreg_experiment* exp, size_t index, const char** strategy,
                                       uint64_t* seed, double* ap_final, double* af_final) {
  if (exp == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null experiment");
  if (index >= exp->results.size()) return set_error(GCLREG_INVALID_ARGUMENT, "result index out of range");
  const auto& r = exp->results[index];
  if (strategy != nullptr) *strategy = r.strategy.c_str();
  if (seed != nullptr) *seed = r.seed;
  if (ap_final != nullptr) *ap_final = r.ap_final;
  if (af_final != nullptr) *af_final = r.af_final.value_or(std::numeric_limits<double>::quiet_NaN());
  return GCLREG_OK;
}

void gclreg_sbm_defaults(gclreg_sbm_params* params) {
  if (params == nullptr) return;
  const gclreg::SbmParams d;
  *params = gclreg_sbm_params{d.num_classes, d.nodes_per_class, d.feature_dim, d.p_in, d.p_out, d.mean_scale, d.seed};
}

gclreg_status gclreg_graph_generate_sbm(const gclreg_sbm_params* params, gclreg_graph** out) {
  if (params == nullptr || out == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    gclreg::SbmParams p;
    p.num_classes = params->num_classes;
    p.nodes_per_class = params->nodes_per_class;
    p.feature_dim = params->feature_dim;
    p.p_in = params->p_in;
    p.p_out = params->p_out;
    p.mean_scale = params->mean_scale;
    p.seed = params->seed;
    *out = new gclreg_graph{gclreg::generate_sbm_stream(p)};
  });
}

gclreg_status gclreg_graph_load(const char* node_file, const char* edge_file, gclreg_graph** out) {
  if (node_file == nullptr || edge_file == nullptr || out == nullptr) {
    return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  }
  *out = nullptr;
  return guarded([&] { *out = new gclreg_graph{gclreg::load_graph(node_file, edge_file)}; });
}

gclreg_status gclreg_graph_save(const gclreg_graph* graph, const char* node_file, const char* edge_file) {
  if (graph == nullptr || node_file == nullptr || edge_file == nullptr) {
    return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] { gclreg::save_graph(graph->raw, node_file, edge_file); });
}

void gclreg_graph_free(gclreg_graph* graph) { delete graph; }

int gclreg_graph_num_nodes(const gclreg_graph* graph) { return graph != nullptr ? graph->raw.num_nodes : -1; }

int gclreg_graph_num_edges(const gclreg_graph* graph) {
  return graph != nullptr ? static_cast<int>(graph->raw.edges.size()) : -1;
}

int gclreg_graph_feature_dim(const gclreg_graph* graph) { return graph != nullptr ? graph->raw.feature_dim() : -1; }

int gclreg_graph_label(const gclreg_graph* graph, int node) {
  if (graph == nullptr || node < 0 || node >= graph->raw.num_nodes) return -1;
  return graph->raw.labels[static_cast<std::size_t>(node)];
}

gclreg_status gclreg_graph_num_tasks(const gclreg_graph* graph, int classes_per_task, int* out) {
  if (graph == nullptr || out == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (classes_per_task < 1) gclreg::fail(gclreg::ErrorKind::kConfig, "classes_per_task must be >= 1");
    const std::set<gclreg::ClassId> classes(graph->raw.labels.begin(), graph->raw.labels.end());
    *out = static_cast<int>((classes.size() + static_cast<std::size_t>(classes_per_task) - 1) /
                            static_cast<std::size_t>(classes_per_task));
  });
}

gclreg_status gclreg_average_performance(const double* matrix, int num_tasks, int t, double* out) {
  if (out == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = gclreg::average_performance(matrix_from(matrix, num_tasks, t), t); });
}

gclreg_status gclreg_average_forgetting(const double* matrix, int num_tasks, int t, double* out) {
  if (out == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = gclreg::average_forgetting(matrix_from(matrix, num_tasks, t), t)
               .value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

gclreg_status gclreg_checkpoint_shape(const char* path, int* input_dim, int* hidden_dim, int* num_classes) {
  if (path == nullptr) return set_error(GCLREG_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const gclreg::ModelParams p = gclreg::load_checkpoint(path);
    if (input_dim != nullptr) *input_dim = p.shape().input_dim;
    if (hidden_dim != nullptr) *hidden_dim = p.shape().hidden_dim;
    if (num_classes != nullptr) *num_classes = p.shape().num_classes;
  });
}

}  // extern "C"
