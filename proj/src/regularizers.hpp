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

#ifndef GCLREG_REGULARIZERS_HPP_
#define GCLREG_REGULARIZERS_HPP_

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "fim_lab.hpp"
#include "gcn_model.hpp"
#include "graph_store.hpp"

namespace gclreg {

enum class StrategyKind {
  kNone,  // plain sequential fine-tuning
  kEwcEmpirical,
  kEwcSampled,
  kEwcPredicted,
  kOnlineEwc,
  kMas,
  kLwf,
  kOurs,  // online sampled-label curvature with a gradient cache
};

StrategyKind parse_strategy(const std::string& name);
std::string strategy_name(StrategyKind kind);

struct RegConfig {
  StrategyKind kind = StrategyKind::kOurs;
  // Regularization strength. For LwF this is the distillation weight.
  double lambda = 0.1;
  double gamma = 1.0;          // Online EWC decay
  double temperature = 2.0;    // LwF
  int queue_capacity = 128;    // gradient cache size M

  void validate() const;
};

// Parameter snapshot stored after a completed task. `importance` holds the
// per-anchor diagonal weights for EWC and MAS and is empty otherwise.
struct Anchor {
  int task_id = 0;
  Vector theta;
  Vector importance;
};

class AnchorSet {
 public:
  // Task ids must strictly increase and vector lengths must agree.
  void push(Anchor anchor);
  void clear() { anchors_.clear(); }

  std::size_t size() const { return anchors_.size(); }
  bool empty() const { return anchors_.empty(); }
  const Anchor& operator[](std::size_t i) const { return anchors_[i]; }
  const Anchor& back() const { return anchors_.back(); }
  auto begin() const { return anchors_.begin(); }
  auto end() const { return anchors_.end(); }

 private:
  std::vector<Anchor> anchors_;
};

struct Penalty {
  double value = 0.0;
  Vector grad;  // empty means zero
};

// FIFO of sampled-label per-sample gradients; oldest evicted first.
class GradCache {
 public:
  explicit GradCache(std::size_t capacity = 128);

  void push(PerSampleGrad g);
  void clear() { items_.clear(); }
  void set_capacity(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const PerSampleGrad& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t capacity_;
  std::deque<PerSampleGrad> items_;
};

// (lambda/2) sum_i w_i (theta_i - anchor_i)^2 and its gradient.
Penalty quadratic_penalty(const Vector& theta, const Vector& anchor, const Vector& weights, double lambda);

// (lambda/2) sum_t sum_i F_{t,i} (theta_i - theta_{t,i})^2 over all anchors.
// Each anchor must carry its diagonal weights.
Penalty ewc_penalty(const Vector& theta, const AnchorSet& anchors, double lambda);

// F <- gamma F + F_new.
Vector online_ewc_update(const Vector& running, const Vector& new_task_fim, double gamma);

// Omega_i = mean_v | d ||softmax_v||^2 / d theta_i |.
Vector mas_importance(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                      std::span<const NodeId> nodes);

// Gradient of ||softmax_v||^2 w.r.t. theta for a single node.
Vector mas_output_grad(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace, NodeId node);

// lambda_dist * sum_v KL(soft_T(old_v) || soft_T(new_v)) over the classes in
// `old_classes`. No previous model means no penalty.
Penalty lwf_penalty(const ModelParams& params, const ModelParams* old_params, const GraphInput& input,
                    const ClassMask& current_classes, const ClassMask& old_classes, std::span<const NodeId> batch,
                    double temperature, double lambda_dist);
Penalty lwf_penalty(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                    const Matrix& old_logits, const ClassMask& old_classes, std::span<const NodeId> batch,
                    double temperature, double lambda_dist);

void ours_cache_push(GradCache& cache, PerSampleGrad g);

// (lambda / (2|Q|)) sum_{v in Q} [ sum_t g_v^T (theta - theta_t) ]^2, with the
// cached g_v held constant when differentiating.
Penalty ours_penalty(const Vector& theta, const AnchorSet& anchors, const GradCache& cache, double lambda);

struct UnbiasednessResult {
  double mc_mean = 0.0;
  double exact = 0.0;
  double mc_std = 0.0;  // sample standard deviation of one draw
  int draws = 0;
};

// Compares the Monte-Carlo mean of (lambda/2) sum_t (theta-theta_t)^T I_B (theta-theta_t),
// I_B drawn with fresh sampled labels each time, against the same form with the exact FIM.
UnbiasednessResult ours_unbiasedness_check(const ModelParams& params, const AnchorSet& anchors,
                                           const GraphInput& input, const ClassMask& mask,
                                           std::span<const NodeId> batch, Rng& rng, int draws, double lambda = 1.0);

// Everything a strategy may look at when a task starts or ends.
struct TaskContext {
  const TaskGraph& task;
  const ClassMask& seen_before;  // classes of tasks < current
  const ClassMask& seen_now;     // classes of tasks <= current
  const AnchorSet& anchors;
};

struct StepContext {
  const ModelParams& params;
  const GraphInput& input;
  const ForwardTrace& trace;
  std::span<const NodeId> batch;
  const AnchorSet& anchors;
  GradCache& cache;
};

class Regularizer {
 public:
  explicit Regularizer(RegConfig config) : config_(config) {}
  virtual ~Regularizer() = default;

  const RegConfig& config() const { return config_; }

  virtual void begin_task(const TaskContext& /*ctx*/, const ModelParams& /*params*/) {}
  // Penalty for one batch; zero while no anchor exists.
  virtual Penalty step(const StepContext& ctx, Rng& rng) = 0;
  // Called with the finished task's anchor before it is stored, so the
  // strategy can attach importance weights.
  virtual void end_task(const TaskContext& /*ctx*/, const ModelParams& /*anchor_params*/, Anchor& /*anchor*/,
                        Rng& /*rng*/) {}

 private:
  RegConfig config_;
};

std::unique_ptr<Regularizer> make_regularizer(const RegConfig& config);

}  // namespace gclreg

#endif  // GCLREG_REGULARIZERS_HPP_
