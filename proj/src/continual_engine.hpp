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

#ifndef GCLREG_CONTINUAL_ENGINE_HPP_
#define GCLREG_CONTINUAL_ENGINE_HPP_

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "common.hpp"
#include "gcn_model.hpp"
#include "graph_store.hpp"
#include "metrics_report.hpp"
#include "regularizers.hpp"

namespace gclreg {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 128;
  double learning_rate = 1e-5;
  double weight_decay = 5e-4;
  double ema_beta = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int hidden_dim = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamMoments {
  Vector first;
  Vector second;
  std::int64_t step = 0;
};

// One Adam update with classic L2 (weight_decay * theta added to the
// gradient) and bias-corrected moments. Increments moments.step.
void adam_step(Vector& params, const Vector& grad, AdamMoments& moments, const TrainConfig& cfg);

// beta * previous + (1 - beta) * current.
Vector ema_snapshot(const Vector& previous, const Vector& current, double beta);

// Shuffles a copy of `nodes` and cuts it into contiguous chunks.
std::vector<std::vector<NodeId>> make_batches(std::span<const NodeId> nodes, int batch_size, Rng& rng);

struct TrainState {
  ModelParams params;
  AdamMoments moments;
  AnchorSet anchors;
  GradCache cache;
  Vector previous_snapshot;  // theta_{t-1}; the initialization before task 1
  int cursor = 1;            // id of the next task to train
  Rng batch_rng;
  Rng reg_rng;
};

// Glorot-initialized state. Batching and regularizer sampling draw from
// separate streams so a zero-strength strategy cannot perturb batching.
TrainState init_state(const ModelShape& shape, const TrainConfig& cfg);

struct TaskLogger {
  std::ostream* out = nullptr;  // null disables logging
};

void train_task(TrainState& state, const TaskSchedule& schedule, const TaskGraph& task, const TrainConfig& cfg,
                Regularizer& reg, TaskLogger log = {});

struct StreamResult {
  AccuracyMatrix accuracy;
  ModelParams final_params;
};

// Trains every task of the schedule in order and evaluates after each one.
StreamResult run_stream(const TaskSchedule& schedule, const TrainConfig& cfg, const RegConfig& reg_cfg,
                        TaskLogger log = {});

}  // namespace gclreg

#endif  // GCLREG_CONTINUAL_ENGINE_HPP_
