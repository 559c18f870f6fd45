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

#include "fim_lab.hpp"

#include <string>

#include <Eigen/Eigenvalues>

namespace gclreg {

namespace {

void guard_dense(const ModelParams& params) {
  if (params.dim() > kMaxDenseFimDim) {
    fail(ErrorKind::kSize, "dense FIM requested for dim(theta) = " + std::to_string(params.dim()) + " > " +
                               std::to_string(kMaxDenseFimDim));
  }
}

void add_outer(Matrix& fim, const Vector& g, double weight) {
  fim.selfadjointView<Eigen::Lower>().rankUpdate(g, weight);
}

Matrix finish_symmetric(Matrix& lower) {
  Matrix full = lower.selfadjointView<Eigen::Lower>();
  return full;
}

}  // namespace

Matrix exact_fim(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                 std::span<const NodeId> nodes) {
  guard_dense(params);
  Matrix fim = Matrix::Zero(params.dim(), params.dim());
  if (nodes.empty()) return fim;
  const ForwardTrace trace = forward(params, input, mask);
  for (NodeId v : nodes) {
    for (ClassId c = 0; c < trace.num_classes(); ++c) {
      const double p = trace.probs(v, c);
      if (!mask[c] || p <= 0.0) continue;
      add_outer(fim, per_sample_loglik_grad(params, input, trace, v, c).grad, p);
    }
  }
  return finish_symmetric(fim);
}

Vector diag_fim(FisherLabels labels_from, const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                std::span<const NodeId> nodes, std::span<const ClassId> labels, Rng& rng) {
  Vector diag = Vector::Zero(params.dim());
  if (nodes.empty()) return diag;
  const ForwardTrace trace = forward(params, input, mask);
  for (NodeId v : nodes) {
    ClassId y = 0;
    switch (labels_from) {
      case FisherLabels::kEmpirical:
        if (static_cast<int>(labels.size()) != trace.num_nodes()) {
          fail(ErrorKind::kShape, "empirical FIM needs a label for every node");
        }
        y = labels[v];
        break;
      case FisherLabels::kSampled:
        y = sample_label(trace, v, rng);
        break;
      case FisherLabels::kPredicted:
        y = predict(trace, v);
        break;
    }
    diag += per_sample_loglik_grad(params, input, trace, v, y).grad.array().square().matrix();
  }
  return diag;
}

Vector diag_fim_empirical(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                          std::span<const NodeId> nodes, std::span<const ClassId> labels) {
  Rng unused(0);
  return diag_fim(FisherLabels::kEmpirical, params, input, mask, nodes, labels, unused);
}

Vector diag_fim_sampled(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                        std::span<const NodeId> nodes, Rng& rng) {
  return diag_fim(FisherLabels::kSampled, params, input, mask, nodes, {}, rng);
}

Vector diag_fim_predicted(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                          std::span<const NodeId> nodes) {
  Rng unused(0);
  return diag_fim(FisherLabels::kPredicted, params, input, mask, nodes, {}, unused);
}

Matrix sampled_batch_fim(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                         std::span<const NodeId> batch, Rng& rng) {
  guard_dense(params);
  Matrix fim = Matrix::Zero(params.dim(), params.dim());
  if (batch.empty()) return fim;
  const ForwardTrace trace = forward(params, input, mask);
  for (NodeId v : batch) {
    const ClassId y = sample_label(trace, v, rng);
    add_outer(fim, per_sample_loglik_grad(params, input, trace, v, y).grad, 1.0);
  }
  return finish_symmetric(fim);
}

int fim_rank(const Matrix& fim, double tol) {
  if (fim.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fim, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  if (top <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) rank += ev(i) > tol * top ? 1 : 0;
  return rank;
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double max_asymmetry(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace gclreg
