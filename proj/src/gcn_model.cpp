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

#include "gcn_model.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace gclreg {

ModelParams::ModelParams(ModelShape shape) : shape_(shape), theta_(Vector::Zero(shape.dim())) {}

ModelParams::ModelParams(ModelShape shape, Vector theta) : shape_(shape), theta_(std::move(theta)) {
  if (theta_.size() != shape_.dim()) {
    fail(ErrorKind::kShape, "parameter vector has length " + std::to_string(theta_.size()) + ", shape needs " +
                                std::to_string(shape_.dim()));
  }
}

ModelParams ModelParams::glorot(ModelShape shape, Rng& rng) {
  ModelParams p(shape);
  auto fill = [&rng](Eigen::Map<RowMatrix> w, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (Eigen::Index i = 0; i + 1 < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  };
  fill(p.layer1(), shape.input_dim, shape.hidden_dim);
  fill(p.layer2(), shape.hidden_dim, shape.num_classes);
  return p;
}

Eigen::Map<const RowMatrix> ModelParams::layer1() const {
  return {theta_.data(), shape_.input_dim + 1, shape_.hidden_dim};
}
Eigen::Map<RowMatrix> ModelParams::layer1() { return {theta_.data(), shape_.input_dim + 1, shape_.hidden_dim}; }
Eigen::Map<const RowMatrix> ModelParams::layer2() const {
  return {theta_.data() + shape_.layer1_size(), shape_.hidden_dim + 1, shape_.num_classes};
}
Eigen::Map<RowMatrix> ModelParams::layer2() {
  return {theta_.data() + shape_.layer1_size(), shape_.hidden_dim + 1, shape_.num_classes};
}

std::uint64_t params_hash(const Vector& theta) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(theta.data());
  const std::size_t n = static_cast<std::size_t>(theta.size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

Matrix masked_softmax(const Matrix& logits, const ClassMask& mask) {
  if (mask.size() != logits.cols()) fail(ErrorKind::kShape, "class mask width differs from logit width");
  Matrix p = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index v = 0; v < logits.rows(); ++v) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      if (mask[c]) m = std::max(m, logits(v, c));
    }
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      if (mask[c]) {
        p(v, c) = std::exp(logits(v, c) - m);
        z += p(v, c);
      }
    }
    if (z > 0.0) p.row(v) /= z;
  }
  return p;
}

ForwardTrace forward(const ModelParams& params, const GraphInput& input, const ClassMask& mask) {
  const ModelShape& s = params.shape();
  if (input.feature_dim() != s.input_dim) {
    fail(ErrorKind::kShape, "feature dimension " + std::to_string(input.feature_dim()) + " does not match model input " +
                                std::to_string(s.input_dim));
  }
  if (mask.size() != s.num_classes) fail(ErrorKind::kShape, "class mask width differs from model output width");
  if (mask.count() == 0) fail(ErrorKind::kShape, "class mask has no active class");

  ForwardTrace t;
  t.mask = mask;
  t.hidden_pre = input.propagated_input() * params.layer1();
  const Eigen::Index n = t.hidden_pre.rows();
  t.hidden_ext.resize(n, s.hidden_dim + 1);
  t.hidden_ext.leftCols(s.hidden_dim) = t.hidden_pre.cwiseMax(0.0);
  t.hidden_ext.col(s.hidden_dim).setOnes();
  t.propagated_hidden = input.adjacency() * t.hidden_ext;
  t.logits = t.propagated_hidden * params.layer2();
  t.probs = masked_softmax(t.logits, mask);
  return t;
}

Vector backward(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                std::span<const NodeId> nodes, const Matrix& dlogits) {
  const ModelShape& s = params.shape();
  if (dlogits.rows() != static_cast<Eigen::Index>(nodes.size()) || dlogits.cols() != s.num_classes) {
    fail(ErrorKind::kShape, "upstream gradient shape does not match the node list");
  }
  Vector grad = Vector::Zero(s.dim());
  if (nodes.empty()) return grad;
  Eigen::Map<RowMatrix> g1(grad.data(), s.input_dim + 1, s.hidden_dim);
  Eigen::Map<RowMatrix> g2(grad.data() + s.layer1_size(), s.hidden_dim + 1, s.num_classes);

  const Eigen::Index k = dlogits.rows();
  Matrix rows_x1(k, s.hidden_dim + 1);
  for (Eigen::Index i = 0; i < k; ++i) rows_x1.row(i) = trace.propagated_hidden.row(nodes[i]);
  g2.noalias() = rows_x1.transpose() * dlogits;

  // Gradient w.r.t. the propagated hidden rows; the ones column carries no
  // upstream signal, so only the first h columns are kept.
  const Matrix d_prop = dlogits * params.layer2().topRows(s.hidden_dim).transpose();

  // Scatter through Ã (symmetric, so row v lists v's neighbours).
  const SparseMatrix& adj = input.adjacency();
  const Eigen::Index n = adj.rows();
  std::vector<Eigen::Index> slot(n, -1);
  std::vector<NodeId> touched;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (SparseMatrix::InnerIterator it(adj, nodes[i]); it; ++it) {
      const auto u = it.col();
      if (slot[u] < 0) {
        slot[u] = static_cast<Eigen::Index>(touched.size());
        touched.push_back(static_cast<NodeId>(u));
      }
    }
  }
  Matrix d_hidden = Matrix::Zero(static_cast<Eigen::Index>(touched.size()), s.hidden_dim);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (SparseMatrix::InnerIterator it(adj, nodes[i]); it; ++it) {
      d_hidden.row(slot[it.col()]) += it.value() * d_prop.row(i);
    }
  }

  Matrix rows_x0(static_cast<Eigen::Index>(touched.size()), s.input_dim + 1);
  for (std::size_t r = 0; r < touched.size(); ++r) {
    const NodeId u = touched[r];
    rows_x0.row(static_cast<Eigen::Index>(r)) = input.propagated_input().row(u);
    for (int j = 0; j < s.hidden_dim; ++j) {
      // ReLU subgradient at 0 is 0.
      if (trace.hidden_pre(u, j) <= 0.0) d_hidden(static_cast<Eigen::Index>(r), j) = 0.0;
    }
  }
  g1.noalias() = rows_x0.transpose() * d_hidden;
  return grad;
}

namespace {

void check_label(const ForwardTrace& trace, ClassId label) {
  if (label < 0 || label >= trace.num_classes()) {
    fail(ErrorKind::kValidation, "label " + std::to_string(label) + " outside logit range [0, " +
                                     std::to_string(trace.num_classes()) + ")");
  }
  if (!trace.mask[label]) fail(ErrorKind::kValidation, "label " + std::to_string(label) + " is not an active class");
}

void check_node(const ForwardTrace& trace, NodeId node) {
  if (node < 0 || node >= trace.num_nodes()) fail(ErrorKind::kValidation, "node id " + std::to_string(node) + " out of range");
}

}  // namespace

LossGrad loss_and_grad(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                       std::span<const NodeId> batch, std::span<const ClassId> labels) {
  if (static_cast<int>(labels.size()) != trace.num_nodes()) fail(ErrorKind::kShape, "label vector must cover every node");
  LossGrad out;
  Matrix dlogits(static_cast<Eigen::Index>(batch.size()), trace.num_classes());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const NodeId v = batch[i];
    check_node(trace, v);
    const ClassId y = labels[v];
    check_label(trace, y);
    out.loss -= std::log(trace.probs(v, y));
    dlogits.row(static_cast<Eigen::Index>(i)) = trace.probs.row(v);
    dlogits(static_cast<Eigen::Index>(i), y) -= 1.0;
  }
  out.grad = backward(params, input, trace, batch, dlogits);
  return out;
}

LossGrad loss_and_grad(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                       std::span<const NodeId> batch, std::span<const ClassId> labels) {
  return loss_and_grad(params, input, forward(params, input, mask), batch, labels);
}

PerSampleGrad per_sample_loglik_grad(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                                     NodeId node, ClassId label) {
  check_node(trace, node);
  check_label(trace, label);
  Matrix dlogits = -trace.probs.row(node);
  dlogits(0, label) += 1.0;
  const NodeId nodes[1] = {node};
  return PerSampleGrad{node, label, backward(params, input, trace, nodes, dlogits), params_hash(params.flat())};
}

PerSampleGrad per_sample_loglik_grad(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                                     NodeId node, ClassId label) {
  return per_sample_loglik_grad(params, input, forward(params, input, mask), node, label);
}

ClassId sample_label(const ForwardTrace& trace, NodeId node, Rng& rng) {
  check_node(trace, node);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cum = 0.0;
  ClassId last = -1;
  for (ClassId c = 0; c < trace.num_classes(); ++c) {
    const double p = trace.probs(node, c);
    if (p <= 0.0) continue;
    cum += p;
    last = c;
    if (u < cum) return c;
  }
  return last;  // u landed in the rounding gap above the final cumulative sum
}

ClassId predict(const ForwardTrace& trace, NodeId node) {
  ClassId best = -1;
  for (ClassId c = 0; c < trace.num_classes(); ++c) {
    if (!trace.mask[c]) continue;
    if (best < 0 || trace.logits(node, c) > trace.logits(node, best)) best = c;
  }
  return best;
}

}  // namespace gclreg
