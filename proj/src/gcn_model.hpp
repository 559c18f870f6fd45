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

#ifndef GCLREG_GCN_MODEL_HPP_
#define GCLREG_GCN_MODEL_HPP_

#include <cstdint>
#include <span>
#include <utility>

#include "common.hpp"
#include "graph_store.hpp"

namespace gclreg {

struct ModelShape {
  int input_dim = 0;
  int hidden_dim = 0;
  int num_classes = 0;

  Eigen::Index layer1_size() const { return static_cast<Eigen::Index>(input_dim + 1) * hidden_dim; }
  Eigen::Index layer2_size() const { return static_cast<Eigen::Index>(hidden_dim + 1) * num_classes; }
  Eigen::Index dim() const { return layer1_size() + layer2_size(); }
  bool operator==(const ModelShape&) const = default;
};

// Parameters of the two-layer GCN, stored as one flat vector theta.
// Layout: layer 1 ((d+1) x h, bias in the last row) then layer 2
// ((h+1) x C), both row-major.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelShape shape);  // all zeros
  ModelParams(ModelShape shape, Vector theta);

  // Uniform Glorot weights, zero bias rows.
  static ModelParams glorot(ModelShape shape, Rng& rng);

  const ModelShape& shape() const { return shape_; }
  Eigen::Index dim() const { return theta_.size(); }
  const Vector& flat() const { return theta_; }
  Vector& flat() { return theta_; }

  Eigen::Map<const RowMatrix> layer1() const;
  Eigen::Map<RowMatrix> layer1();
  Eigen::Map<const RowMatrix> layer2() const;
  Eigen::Map<RowMatrix> layer2();

 private:
  ModelShape shape_;
  Vector theta_;
};

// FNV-1a over the bytes of theta; identifies the point a gradient was
// taken at.
std::uint64_t params_hash(const Vector& theta);

struct ForwardTrace {
  Matrix hidden_pre;         // H1 = Ã X0 W1, n x h
  Matrix hidden_ext;         // X1 = [relu(H1) 1], n x (h+1)
  Matrix propagated_hidden;  // Ã X1
  Matrix logits;             // H2, n x C, unmasked
  Matrix probs;              // row-softmax over active classes
  ClassMask mask;

  int num_nodes() const { return static_cast<int>(logits.rows()); }
  int num_classes() const { return static_cast<int>(logits.cols()); }
};

ForwardTrace forward(const ModelParams& params, const GraphInput& input, const ClassMask& mask);

// Row softmax of `logits` restricted to `mask`; masked entries are exactly 0.
Matrix masked_softmax(const Matrix& logits, const ClassMask& mask);

// Backpropagates upstream gradients on the logits of `nodes` (one row of
// `dlogits` per node) to a flat parameter gradient.
Vector backward(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                std::span<const NodeId> nodes, const Matrix& dlogits);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// Summed cross-entropy over `batch`, labels indexed by node.
LossGrad loss_and_grad(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                       std::span<const NodeId> batch, std::span<const ClassId> labels);
LossGrad loss_and_grad(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                       std::span<const NodeId> batch, std::span<const ClassId> labels);

struct PerSampleGrad {
  NodeId node = 0;
  ClassId label = 0;
  Vector grad;  // d log P[node, label] / d theta
  std::uint64_t params_hash = 0;
};

PerSampleGrad per_sample_loglik_grad(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                                     NodeId node, ClassId label);
PerSampleGrad per_sample_loglik_grad(const ModelParams& params, const GraphInput& input, const ForwardTrace& trace,
                                     NodeId node, ClassId label);

// Draws from the node's predicted categorical distribution.
ClassId sample_label(const ForwardTrace& trace, NodeId node, Rng& rng);

// Argmax over active classes, ties to the lowest class id.
ClassId predict(const ForwardTrace& trace, NodeId node);

}  // namespace gclreg

#endif  // GCLREG_GCN_MODEL_HPP_
