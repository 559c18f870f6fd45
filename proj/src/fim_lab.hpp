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

#ifndef GCLREG_FIM_LAB_HPP_
#define GCLREG_FIM_LAB_HPP_

#include <span>

#include "common.hpp"
#include "gcn_model.hpp"

namespace gclreg {

// Dense FIM routines refuse models larger than this.
inline constexpr Eigen::Index kMaxDenseFimDim = 5000;

// Conditional FIM with the label expectation taken in closed form:
//   F = sum_v sum_c P[v,c] g_{v,c} g_{v,c}^T,  g_{v,c} = d log P[v,c] / d theta.
Matrix exact_fim(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                 std::span<const NodeId> nodes);

enum class FisherLabels {
  kEmpirical,  // the node's true label
  kSampled,    // one draw from the predicted distribution
  kPredicted,  // argmax of the predicted distribution
};

// diag[i] = sum_v (d log P[v, y_v] / d theta_i)^2 with y_v chosen per `labels_from`.
// `labels` is only read for kEmpirical, `rng` only for kSampled.
Vector diag_fim(FisherLabels labels_from, const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                std::span<const NodeId> nodes, std::span<const ClassId> labels, Rng& rng);

Vector diag_fim_empirical(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                          std::span<const NodeId> nodes, std::span<const ClassId> labels);
Vector diag_fim_sampled(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                        std::span<const NodeId> nodes, Rng& rng);
Vector diag_fim_predicted(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                          std::span<const NodeId> nodes);

// Rank-one-per-node random estimate sum_{v in batch} g_v g_v^T with labels
// drawn from the model. Its expectation is exact_fim(batch).
Matrix sampled_batch_fim(const ModelParams& params, const GraphInput& input, const ClassMask& mask,
                         std::span<const NodeId> batch, Rng& rng);

inline constexpr double kDefaultRankTol = 1e-8;

// Number of eigenvalues above tol * (largest eigenvalue).
int fim_rank(const Matrix& fim, double tol = kDefaultRankTol);

double min_eigenvalue(const Matrix& symmetric);
double max_asymmetry(const Matrix& m);

}  // namespace gclreg

#endif  // GCLREG_FIM_LAB_HPP_
