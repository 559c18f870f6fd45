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

#include "continual_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gclreg {

void TrainConfig::validate() const {
  if (epochs < 0) fail(ErrorKind::kConfig, "epochs must be >= 0");
  if (batch_size < 1) fail(ErrorKind::kConfig, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kConfig, "learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) fail(ErrorKind::kConfig, "weight_decay must be >= 0");
  if (!(ema_beta >= 0.0 && ema_beta <= 1.0)) fail(ErrorKind::kConfig, "ema_beta must lie in [0, 1]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail(ErrorKind::kConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail(ErrorKind::kConfig, "adam_eps must be > 0");
  if (hidden_dim < 1) fail(ErrorKind::kConfig, "hidden_dim must be >= 1");
}

void adam_step(Vector& params, const Vector& grad, AdamMoments& moments, const TrainConfig& cfg) {
  if (grad.size() != params.size()) fail(ErrorKind::kShape, "gradient length differs from parameter length");
  if (moments.first.size() != params.size()) {
    moments.first = Vector::Zero(params.size());
    moments.second = Vector::Zero(params.size());
  }
  ++moments.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(moments.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(moments.step));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grad(i) + cfg.weight_decay * params(i);
    moments.first(i) = b1 * moments.first(i) + (1.0 - b1) * g;
    moments.second(i) = b2 * moments.second(i) + (1.0 - b2) * g * g;
    const double m_hat = moments.first(i) / correction1;
    const double v_hat = moments.second(i) / correction2;
    params(i) -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

Vector ema_snapshot(const Vector& previous, const Vector& current, double beta) {
  if (previous.size() != current.size()) fail(ErrorKind::kShape, "EMA operands differ in length");
  return beta * previous + (1.0 - beta) * current;
}

std::vector<std::vector<NodeId>> make_batches(std::span<const NodeId> nodes, int batch_size, Rng& rng) {
  if (batch_size < 1) fail(ErrorKind::kConfig, "batch_size must be >= 1");
  std::vector<NodeId> order(nodes.begin(), nodes.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<NodeId>> batches;
  for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + first, order.begin() + last);
  }
  return batches;
}

TrainState init_state(const ModelShape& shape, const TrainConfig& cfg) {
  cfg.validate();
  Rng init_rng(cfg.seed);
  // Derived stream seeds; fixed offsets keep them distinct from the init stream.
  TrainState s{ModelParams::glorot(shape, init_rng),
               AdamMoments{},
               AnchorSet{},
               GradCache{},
               Vector{},
               1,
               Rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL),
               Rng(cfg.seed ^ 0xD1B54A32D192ED03ULL)};
  s.previous_snapshot = s.params.flat();
  return s;
}

void train_task(TrainState& state, const TaskSchedule& schedule, const TaskGraph& task, const TrainConfig& cfg,
                Regularizer& reg, TaskLogger log) {
  if (task.task_id != state.cursor) {
    fail(ErrorKind::kValidation, "task " + std::to_string(task.task_id) + " presented while expecting task " +
                                     std::to_string(state.cursor));
  }
  if (task.train.empty()) fail(ErrorKind::kValidation, "task " + std::to_string(task.task_id) + " has no training nodes");
  if (state.anchors.size() != static_cast<std::size_t>(state.cursor - 1)) {
    fail(ErrorKind::kValidation, "anchor count does not match the task cursor");
  }

  const ClassMask seen_before = schedule.seen_classes(task.task_id - 1);
  const ClassMask seen_now = schedule.seen_classes(task.task_id);
  const TaskContext ctx{task, seen_before, seen_now, state.anchors};

  state.cache.clear();
  state.cache.set_capacity(static_cast<std::size_t>(reg.config().queue_capacity));
  reg.begin_task(ctx, state.params);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    double epoch_reg = 0.0;
    const auto batches = make_batches(task.train, cfg.batch_size, state.batch_rng);
    for (const auto& batch : batches) {
      const ForwardTrace trace = forward(state.params, task.input, seen_now);
      LossGrad lg = loss_and_grad(state.params, task.input, trace, batch, task.labels());
      const StepContext step{state.params, task.input, trace, batch, state.anchors, state.cache};
      const Penalty pen = reg.step(step, state.reg_rng);
      if (pen.grad.size() != 0) lg.grad += pen.grad;
      adam_step(state.params.flat(), lg.grad, state.moments, cfg);
      epoch_loss += lg.loss;
      epoch_reg += pen.value;
    }
    if (log.out != nullptr) {
      const double n = static_cast<double>(batches.size());
      const double val_acc = accuracy(forward(state.params, task.input, seen_now), task.val, task.labels());
      *log.out << "task=" << task.task_id << " epoch=" << epoch << " loss=" << format_value(epoch_loss / n)
               << " reg=" << format_value(epoch_reg / n) << " val_acc=" << format_value(val_acc) << '\n';
    }
  }

  // The smoothed parameters become both the stored anchor and the starting
  // point of the next task.
  Anchor anchor{task.task_id, ema_snapshot(state.previous_snapshot, state.params.flat(), cfg.ema_beta), Vector{}};
  state.params.flat() = anchor.theta;
  state.previous_snapshot = anchor.theta;
  reg.end_task(ctx, state.params, anchor, state.reg_rng);
  state.anchors.push(std::move(anchor));
  ++state.cursor;
}

StreamResult run_stream(const TaskSchedule& schedule, const TrainConfig& cfg, const RegConfig& reg_cfg,
                        TaskLogger log) {
  if (schedule.num_tasks() == 0) fail(ErrorKind::kValidation, "schedule has no tasks");
  const ModelShape shape{schedule.tasks.front().input.feature_dim(), cfg.hidden_dim, schedule.output_dim};
  TrainState state = init_state(shape, cfg);
  auto reg = make_regularizer(reg_cfg);
  StreamResult result{AccuracyMatrix(schedule.num_tasks()), ModelParams{}};
  for (const TaskGraph& task : schedule.tasks) {
    train_task(state, schedule, task, cfg, *reg, log);
    result.accuracy.set_row(task.task_id, evaluate(state.params, schedule, task.task_id));
  }
  result.final_params = state.params;
  return result;
}

}  // namespace gclreg
