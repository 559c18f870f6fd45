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

#ifndef GCLREG_GRAPH_STORE_HPP_
#define GCLREG_GRAPH_STORE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "common.hpp"

namespace gclreg {

using Edge = std::pair<NodeId, NodeId>;

// Undirected graph with dense node features. Edges are stored once with
// first < second, sorted and unique.
struct RawGraph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  Matrix features;
  std::vector<ClassId> labels;

  int feature_dim() const { return static_cast<int>(features.cols()); }
  // Throws kValidation when an invariant is broken.
  void validate() const;
};

// Canonicalizes an edge list: orders endpoints, drops self-loops and
// duplicates, sorts.
std::vector<Edge> canonical_edges(std::vector<Edge> edges);

// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
SparseMatrix normalize_adjacency(const RawGraph& raw);

// Everything a forward pass needs about one graph. The propagated input
// Ã [X 1] does not depend on parameters, so it is computed once here.
class GraphInput {
 public:
  GraphInput() = default;
  GraphInput(SparseMatrix adjacency, Matrix features);

  int num_nodes() const { return static_cast<int>(adjacency_.rows()); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  const SparseMatrix& adjacency() const { return adjacency_; }
  const Matrix& features() const { return features_; }
  const Matrix& propagated_input() const { return propagated_; }

 private:
  SparseMatrix adjacency_;
  Matrix features_;
  Matrix propagated_;
};

struct SplitRatio {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct TaskGraph {
  int task_id = 0;  // 1-based presentation index
  std::vector<NodeId> global_ids;  // local id -> id in the source graph
  RawGraph subgraph;               // local ids, global class labels
  GraphInput input;
  std::vector<ClassId> class_set;  // ascending
  std::vector<NodeId> train;       // local ids, ascending
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  const std::vector<ClassId>& labels() const { return subgraph.labels; }
};

struct TaskSchedule {
  std::vector<TaskGraph> tasks;
  int total_classes = 0;  // |union of class sets|
  int output_dim = 0;     // max class id + 1, the classifier head width

  int num_tasks() const { return static_cast<int>(tasks.size()); }
  // Mask over the classes of tasks 1..t.
  ClassMask seen_classes(int t) const;
};

TaskSchedule build_schedule(const RawGraph& raw, int classes_per_task, SplitRatio ratio, std::uint64_t seed);

struct SbmParams {
  int num_classes = 6;
  int nodes_per_class = 100;
  int feature_dim = 16;
  double p_in = 0.05;
  double p_out = 0.005;
  double mean_scale = 1.0;  // std-dev of the per-class mean coordinates
  std::uint64_t seed = 0;
};

RawGraph generate_sbm_stream(const SbmParams& params);

RawGraph load_graph(const std::filesystem::path& node_file, const std::filesystem::path& edge_file);

// Writes the text formats read by load_graph.
void save_graph(const RawGraph& raw, const std::filesystem::path& node_file, const std::filesystem::path& edge_file);

}  // namespace gclreg

#endif  // GCLREG_GRAPH_STORE_HPP_
