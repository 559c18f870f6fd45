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

#include "regularizers.hpp"

#include <cmath>
#include <limits>

namespace gclreg {

namespace {

struct NamedStrategy {
  const char* name;
  StrategyKind kind;
};

constexpr NamedStrategy kStrategies[] = {
    {"none", StrategyKind::kNone},
    {"ewc_empirical", StrategyKind::kEwcEmpirical},
    {"ewc_sample", StrategyKind::kEwcSampled},
    {"ewc_pred", StrategyKind::kEwcPredicted},
    {"online_ewc", StrategyKind::kOnlineEwc},
    {"mas", StrategyKind::kMas},
    {"lwf", StrategyKind::kLwf},
    {"ours", StrategyKind::kOurs},
};

}  // namespace

StrategyKind parse_strategy(const std::string& name) {
  for (const auto& s : kStrategies) {
    if (name == s.name) return s.kind;
  }
  if (name == "naive" || name == "finetune") return StrategyKind::kNone;
  fail(ErrorKind::kConfig, "unknown strategy '" + name + "'");
}

std::string strategy_name(StrategyKind kind) {
  for (const auto& s : kStrategies) {
    if (s.kind == kind) return s.name;
  }
  return "unknown";
}

void RegConfig::validate() const {
  if (!(lambda >= 0.0)) fail(ErrorKind::kConfig, "lambda must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorKind::kConfig, "gamma must lie in (0, 1]");
  if (queue_capacity < 1) fail(ErrorKind::kConfig, "queue capacity M must be >= 1");
  if (!(temperature > 0.0)) fail(ErrorKind::kConfig, "temperature must be > 0");
}

void AnchorSet::push(Anchor anchor) {
  if (!anchors_.empty()) {
    if (anchor.task_id <= anchors_.back().task_id) fail(ErrorKind::kValidation, "anchor task ids must increase");
    if (anchor.theta.size() != anchors_.back().theta.size()) {
      fail(ErrorKind::kShape, "anchor length differs from earlier anchors");
    }
  }
  if (anchor.importance.size() != 0 && anchor.importance.size() != anchor.theta.size()) {
    fail(ErrorKind::kShape, "anchor importance length differs from theta");
  }
  anchors_.push_back(std::move(anchor));
}

GradCache::GradCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) fail(ErrorKind::kConfig, "gradient cache capacity must be >= 1");
}

void GradCache::set_capacity(std::size_t capacity) {
  if (capacity == 0) fail(ErrorKind::kConfig, "gradient cache capacity must be >= 1");
  capacity_ = capacity;
  while (items_.size() > capacity_) items_.pop_front();
}

void GradCache::push(PerSampleGrad g) {
  if (!items_.empty() && g.grad.size() != items_.front().grad.size()) {
    fail(ErrorKind::kShape, "cached gradient length differs from earlier entries");
  }
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(g));
}

void ours_cache_push(GradCache& cache, PerSampleGrad g) { cache.push(std::move(g)); }

Penalty quadratic_penalty(const Vector& theta, const Vector& anchor, const Vector& weights, double lambda) {
  if (anchor.size() != theta.size() || weights.size() != theta.size()) {
    fail(ErrorKind::kShape, "quadratic penalty operands differ in length");
  }
  const Vector delta = theta - anchor;
  const Vector weighted = weights.cwiseProduct(delta);
  return {0.5 * lambda * weighted.dot(delta), lambda * weighted};
}

Penalty ewc_penalty(const Vector& theta, const AnchorSet& anchors, double lambda) {
  Penalty out{0.0, Vector::Zero(theta.size())};
  for (const Anchor& a : anchors) {
    if (a.importance.size() == 0) {
      fail(ErrorKind::kConfig, "anchor for task " + std::to_string(a.task_id) + " carries no diagonal FIM");
    }
    const Penalty p = quadratic_penalty(theta, a.theta, a.importance, lambda);
    out.value += p.value;
    out.grad += p.grad;
  }
  return out;
}

Vector online_ewc_update(const Vector& running, const Vector& new_task_fim, double gamma) {
  if (running.size() != new_task_fim.size()) fail(ErrorKind::kShape, "running FIM length differs from new FIM");
  return gamma * running + new_task_fim;
}

Vector mas_output_grad(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace, NodeId node) {
  // d ||p||^2 / d z_j = 2 p_j (p_j - ||p||^2); zero on masked classes.
  const auto p = trace.probs.row(node);
  const double sq = p.squaredNorm();
  Matrix dlogits(1, trace.num_classes());
  for (Eigen::Index j = 0; j < p.size(); ++j) dlogits(0, j) = 2.0 * p(j) * (p(j) - sq);
  const NodeId nodes[1] = {node};
  return backward(params, input, trace, nodes, dlogits);
}

Vector mas_importance(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                      std::span<const NodeId> nodes) {
  if (nodes.empty()) fail(ErrorKind::kValidation, "MAS importance needs at least one node");
  const ForwardTrace trace = forward(params, input, mask);
  Vector omega = Vector::Zero(params.dim());
  for (NodeId v : nodes) omega += mas_output_grad(params, input, trace, v).cwiseAbs();
  return omega / static_cast<double>(nodes.size());
}

namespace {

// Softmax of logits / T over the active classes of `mask`.
Eigen::RowVectorXd softened(const Eigen::RowVectorXd& logits, const ClassMask& mask, double temperature) {
  Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    if (mask[c]) m = std::max(m, logits(c) / temperature);
  }
  double z = 0.0;
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    if (mask[c]) {
      q(c) = std::exp(logits(c) / temperature - m);
      z += q(c);
    }
  }
  return q / z;
}

}  // namespace

Penalty lwf_penalty(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                    const Matrix& old_logits, const ClassMask& old_classes, std::span<const NodeId> batch,
                    double temperature, double lambda_dist) {
  Penalty out;
  if (old_classes.count() == 0 || batch.empty()) return out;
  Matrix dlogits = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), trace.num_classes());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const NodeId v = batch[i];
    const Eigen::RowVectorXd q_old = softened(old_logits.row(v), old_classes, temperature);
    const Eigen::RowVectorXd q_new = softened(trace.logits.row(v), old_classes, temperature);
    for (Eigen::Index c = 0; c < q_old.size(); ++c) {
      if (!old_classes[c] || q_old(c) <= 0.0) continue;
      out.value += q_old(c) * (std::log(q_old(c)) - std::log(q_new(c)));
    }
    // d KL / d z_new = (q_new - q_old) / T on the old classes.
    dlogits.row(static_cast<Eigen::Index>(i)) = (q_new - q_old) / temperature;
  }
  out.value *= lambda_dist;
  out.grad = lambda_dist * backward(params, input, trace, batch, dlogits);
  return out;
}

Penalty lwf_penalty(const ModelParams& params, const ModelParams* old_params, const GraphInput& input,
                    const ClassMask& current_classes, const ClassMask& old_classes, std::span<const NodeId> batch,
                    double temperature, double lambda_dist) {
  if (old_params == nullptr) return {0.0, Vector::Zero(params.dim())};
  const ForwardTrace trace = forward(params, input, current_classes);
  const ForwardTrace old_trace = forward(*old_params, input, current_classes);
  return lwf_penalty(params, input, trace, old_trace.logits, old_classes, batch, temperature, lambda_dist);
}

Penalty ours_penalty(const Vector& theta, const AnchorSet& anchors, const GradCache& cache, double lambda) {
  Penalty out{0.0, Vector::Zero(theta.size())};
  if (anchors.empty() || cache.empty()) return out;
  // sum_t g^T (theta - theta_t) = g^T sum_t (theta - theta_t)
  Vector displacement = Vector::Zero(theta.size());
  for (const Anchor& a : anchors) displacement += theta - a.theta;
  const double scale = lambda / static_cast<double>(cache.size());
  for (const PerSampleGrad& g : cache) {
    const double c = g.grad.dot(displacement);
    out.value += c * c;
    out.grad += c * g.grad;
  }
  out.value *= 0.5 * scale;
  out.grad *= scale;
  return out;
}

UnbiasednessResult ours_unbiasedness_check(const ModelParams& params, const AnchorSet& anchors,
                                           const GraphInput& input, const ClassMask& mask,
                                           std::span<const NodeId> batch, Rng& rng, int draws, double lambda) {
  if (draws < 2) fail(ErrorKind::kConfig, "unbiasedness check needs at least two draws");
  const Matrix fim = exact_fim(params, input, mask, batch);  // also enforces the size guard
  UnbiasednessResult out;
  out.draws = draws;
  for (const Anchor& a : anchors) {
    const Vector delta = params.flat() - a.theta;
    out.exact += 0.5 * lambda * delta.dot(fim * delta);
  }

  // Per (node, class) contribution sum_t (g_{v,c}^T delta_t)^2, so a draw
  // only has to pick labels.
  const ForwardTrace trace = forward(params, input, mask);
  const int num_classes = trace.num_classes();
  Matrix contrib = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), num_classes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (ClassId c = 0; c < num_classes; ++c) {
      if (!mask[c] || trace.probs(batch[i], c) <= 0.0) continue;
      const Vector g = per_sample_loglik_grad(params, input, trace, batch[i], c).grad;
      double s = 0.0;
      for (const Anchor& a : anchors) {
        const double proj = g.dot(params.flat() - a.theta);
        s += proj * proj;
      }
      contrib(static_cast<Eigen::Index>(i), c) = 0.5 * lambda * s;
    }
  }

  // Welford accumulation of the per-draw regularizer value.
  double mean = 0.0;
  double m2 = 0.0;
  for (int k = 0; k < draws; ++k) {
    double value = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      value += contrib(static_cast<Eigen::Index>(i), sample_label(trace, batch[i], rng));
    }
    const double d = value - mean;
    mean += d / (k + 1);
    m2 += d * (value - mean);
  }
  out.mc_mean = mean;
  out.mc_std = std::sqrt(m2 / (draws - 1));
  return out;
}

namespace {

class NoRegularizer final : public Regularizer {
 public:
  using Regularizer::Regularizer;
  Penalty step(const StepContext&, Rng&) override { return {}; }
};

class EwcRegularizer final : public Regularizer {
 public:
  EwcRegularizer(RegConfig config, FisherLabels labels) : Regularizer(config), labels_(labels) {}

  Penalty step(const StepContext& ctx, Rng&) override {
    if (ctx.anchors.empty()) return {};
    return ewc_penalty(ctx.params.flat(), ctx.anchors, config().lambda);
  }

  void end_task(const TaskContext& ctx, const ModelParams& anchor_params, Anchor& anchor, Rng& rng) override {
    anchor.importance = diag_fim(labels_, anchor_params, ctx.task.input, ctx.seen_now, ctx.task.train,
                                 ctx.task.labels(), rng);
  }

 private:
  FisherLabels labels_;
};

// Single running diagonal, anchored at the most recent snapshot.
class OnlineEwcRegularizer final : public Regularizer {
 public:
  using Regularizer::Regularizer;

  Penalty step(const StepContext& ctx, Rng&) override {
    if (ctx.anchors.empty()) return {};
    return quadratic_penalty(ctx.params.flat(), ctx.anchors.back().theta, running_, config().lambda);
  }

  void end_task(const TaskContext& ctx, const ModelParams& anchor_params, Anchor&, Rng&) override {
    const Vector fresh = diag_fim_empirical(anchor_params, ctx.task.input, ctx.seen_now, ctx.task.train,
                                            ctx.task.labels());
    running_ = running_.size() == 0 ? fresh : online_ewc_update(running_, fresh, config().gamma);
  }

 private:
  Vector running_;
};

class MasRegularizer final : public Regularizer {
 public:
  using Regularizer::Regularizer;

  Penalty step(const StepContext& ctx, Rng&) override {
    if (ctx.anchors.empty()) return {};
    return ewc_penalty(ctx.params.flat(), ctx.anchors, config().lambda);
  }

  void end_task(const TaskContext& ctx, const ModelParams& anchor_params, Anchor& anchor, Rng&) override {
    anchor.importance = mas_importance(anchor_params, ctx.task.input, ctx.seen_now, ctx.task.train);
  }
};

class LwfRegularizer final : public Regularizer {
 public:
  using Regularizer::Regularizer;

  void begin_task(const TaskContext& ctx, const ModelParams& params) override {
    old_logits_.resize(0, 0);
    old_classes_ = ctx.seen_before;
    if (ctx.anchors.empty()) return;
    // The old model is frozen for the whole task, so its logits on this
    // task's graph are computed once.
    const ModelParams old_params(params.shape(), ctx.anchors.back().theta);
    old_logits_ = forward(old_params, ctx.task.input, ctx.seen_now).logits;
  }

  Penalty step(const StepContext& ctx, Rng&) override {
    if (ctx.anchors.empty() || old_logits_.size() == 0) return {};
    return lwf_penalty(ctx.params, ctx.input, ctx.trace, old_logits_, old_classes_, ctx.batch, config().temperature,
                       config().lambda);
  }

 private:
  Matrix old_logits_;
  ClassMask old_classes_;
};

class OursRegularizer final : public Regularizer {
 public:
  using Regularizer::Regularizer;

  Penalty step(const StepContext& ctx, Rng& rng) override {
    if (ctx.anchors.empty() || ctx.batch.empty()) return {};
    // One node per batch, one label drawn from the current model; the new
    // gradient enters the cache before the penalty is evaluated.
    std::uniform_int_distribution<std::size_t> pick(0, ctx.batch.size() - 1);
    const NodeId v = ctx.batch[pick(rng)];
    const ClassId y = sample_label(ctx.trace, v, rng);
    ours_cache_push(ctx.cache, per_sample_loglik_grad(ctx.params, ctx.input, ctx.trace, v, y));
    return ours_penalty(ctx.params.flat(), ctx.anchors, ctx.cache, config().lambda);
  }
};

}  // namespace

std::unique_ptr<Regularizer> make_regularizer(const RegConfig& config) {
  config.validate();
  switch (config.kind) {
    case StrategyKind::kNone:
      return std::make_unique<NoRegularizer>(config);
    case StrategyKind::kEwcEmpirical:
      return std::make_unique<EwcRegularizer>(config, FisherLabels::kEmpirical);
    case StrategyKind::kEwcSampled:
      return std::make_unique<EwcRegularizer>(config, FisherLabels::kSampled);
    case StrategyKind::kEwcPredicted:
      return std::make_unique<EwcRegularizer>(config, FisherLabels::kPredicted);
    case StrategyKind::kOnlineEwc:
      return std::make_unique<OnlineEwcRegularizer>(config);
    case StrategyKind::kMas:
      return std::make_unique<MasRegularizer>(config);
    case StrategyKind::kLwf:
      return std::make_unique<LwfRegularizer>(config);
    case StrategyKind::kOurs:
      return std::make_unique<OursRegularizer>(config);
  }
  fail(ErrorKind::kConfig, "unhandled strategy kind");
}

}  // namespace gclreg
