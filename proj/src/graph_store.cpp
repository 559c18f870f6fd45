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

#include "graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

namespace gclreg {

void RawGraph::validate() const {
  if (num_nodes < 0) fail(ErrorKind::kValidation, "negative node count");
  if (features.rows() != num_nodes) {
    fail(ErrorKind::kValidation, "feature matrix has " + std::to_string(features.rows()) + " rows, expected " +
                                     std::to_string(num_nodes));
  }
  if (static_cast<int>(labels.size()) != num_nodes) fail(ErrorKind::kValidation, "label count differs from node count");
  for (ClassId y : labels) {
    if (y < 0) fail(ErrorKind::kValidation, "negative class id");
  }
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      fail(ErrorKind::kValidation,
           "edge (" + std::to_string(u) + "," + std::to_string(v) + ") has an endpoint outside [0, " +
               std::to_string(num_nodes) + ")");
    }
    if (u == v) fail(ErrorKind::kValidation, "self-loop in raw edge list at node " + std::to_string(u));
  }
}

std::vector<Edge> canonical_edges(std::vector<Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    out.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SparseMatrix normalize_adjacency(const RawGraph& raw) {
  const int n = raw.num_nodes;
  std::vector<double> degree(n, 1.0);
  for (const auto& [u, v] : raw.edges) {
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  std::vector<double> inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * raw.edges.size());
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
  for (const auto& [u, v] : raw.edges) {
    const double w = inv_sqrt[u] * inv_sqrt[v];
    triplets.emplace_back(u, v, w);
    triplets.emplace_back(v, u, w);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

GraphInput::GraphInput(SparseMatrix adjacency, Matrix features)
    : adjacency_(std::move(adjacency)), features_(std::move(features)) {
  if (adjacency_.rows() != adjacency_.cols() || adjacency_.rows() != features_.rows()) {
    fail(ErrorKind::kShape, "adjacency and feature matrix disagree on the node count");
  }
  Matrix extended(features_.rows(), features_.cols() + 1);
  extended.leftCols(features_.cols()) = features_;
  extended.col(features_.cols()).setOnes();
  propagated_ = adjacency_ * extended;
}

ClassMask TaskSchedule::seen_classes(int t) const {
  std::vector<ClassId> seen;
  for (int i = 0; i < t && i < num_tasks(); ++i) {
    seen.insert(seen.end(), tasks[i].class_set.begin(), tasks[i].class_set.end());
  }
  return ClassMask::of(output_dim, seen);
}

namespace {

// Split sizes for one class. Every split with a positive ratio receives at
// least one node; the caller guarantees n >= 3.
std::array<int, 3> split_sizes(int n, const SplitRatio& r) {
  int n_train = static_cast<int>(std::lround(r.train * n));
  int n_val = static_cast<int>(std::lround(r.val * n));
  if (r.train > 0) n_train = std::max(n_train, 1);
  if (r.val > 0) n_val = std::max(n_val, 1);
  int n_test = n - n_train - n_val;
  const int min_test = r.test > 0 ? 1 : 0;
  while (n_test < min_test) {
    if (n_train >= n_val && n_train > 1) {
      --n_train;
    } else if (n_val > 1) {
      --n_val;
    } else {
      --n_train;
    }
    ++n_test;
  }
  if (r.test <= 0 && n_test > 0) {
    n_train += n_test;  // rounding leftovers go to training
    n_test = 0;
  }
  return {n_train, n_val, n_test};
}

}  // namespace

TaskSchedule build_schedule(const RawGraph& raw, int classes_per_task, SplitRatio ratio, std::uint64_t seed) {
  raw.validate();
  if (classes_per_task < 1) fail(ErrorKind::kConfig, "classes_per_task must be >= 1");
  if (ratio.train < 0 || ratio.val < 0 || ratio.test < 0 ||
      std::abs(ratio.train + ratio.val + ratio.test - 1.0) > 1e-9) {
    fail(ErrorKind::kConfig, "split ratios must be nonnegative and sum to 1");
  }

  std::map<ClassId, std::vector<NodeId>> by_class;
  for (NodeId v = 0; v < raw.num_nodes; ++v) by_class[raw.labels[v]].push_back(v);
  for (const auto& [c, nodes] : by_class) {
    if (nodes.size() < 3) {
      fail(ErrorKind::kValidation,
           "class " + std::to_string(c) + " has " + std::to_string(nodes.size()) + " nodes; at least 3 are required");
    }
  }

  TaskSchedule schedule;
  schedule.total_classes = static_cast<int>(by_class.size());
  schedule.output_dim = by_class.empty() ? 0 : by_class.rbegin()->first + 1;

  std::vector<ClassId> classes;
  for (const auto& kv : by_class) classes.push_back(kv.first);

  // Per-class shuffles consume the generator in ascending class order.
  Rng rng(seed);
  std::map<ClassId, std::array<std::vector<NodeId>, 3>> class_splits;
  for (ClassId c : classes) {
    std::vector<NodeId> nodes = by_class[c];
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const auto sizes = split_sizes(static_cast<int>(nodes.size()), ratio);
    auto& parts = class_splits[c];
    auto it = nodes.begin();
    for (int s = 0; s < 3; ++s) {
      parts[s].assign(it, it + sizes[s]);
      it += sizes[s];
    }
  }

  std::vector<NodeId> local_of(raw.num_nodes, -1);
  for (std::size_t first = 0; first < classes.size(); first += classes_per_task) {
    TaskGraph task;
    task.task_id = schedule.num_tasks() + 1;
    const std::size_t last = std::min(classes.size(), first + classes_per_task);
    task.class_set.assign(classes.begin() + first, classes.begin() + last);

    for (NodeId v = 0; v < raw.num_nodes; ++v) {
      if (std::binary_search(task.class_set.begin(), task.class_set.end(), raw.labels[v])) {
        local_of[v] = static_cast<NodeId>(task.global_ids.size());
        task.global_ids.push_back(v);
      } else {
        local_of[v] = -1;
      }
    }

    RawGraph& sub = task.subgraph;
    sub.num_nodes = static_cast<int>(task.global_ids.size());
    sub.features.resize(sub.num_nodes, raw.feature_dim());
    sub.labels.resize(sub.num_nodes);
    for (int i = 0; i < sub.num_nodes; ++i) {
      sub.features.row(i) = raw.features.row(task.global_ids[i]);
      sub.labels[i] = raw.labels[task.global_ids[i]];
    }
    for (const auto& [u, v] : raw.edges) {
      if (local_of[u] >= 0 && local_of[v] >= 0) sub.edges.emplace_back(local_of[u], local_of[v]);
    }
    sub.edges = canonical_edges(std::move(sub.edges));

    for (ClassId c : task.class_set) {
      const auto& parts = class_splits[c];
      for (NodeId v : parts[0]) task.train.push_back(local_of[v]);
      for (NodeId v : parts[1]) task.val.push_back(local_of[v]);
      for (NodeId v : parts[2]) task.test.push_back(local_of[v]);
    }
    std::sort(task.train.begin(), task.train.end());
    std::sort(task.val.begin(), task.val.end());
    std::sort(task.test.begin(), task.test.end());

    task.input = GraphInput(normalize_adjacency(sub), sub.features);
    schedule.tasks.push_back(std::move(task));
  }
  return schedule;
}

RawGraph generate_sbm_stream(const SbmParams& p) {
  if (p.num_classes < 1 || p.nodes_per_class < 1 || p.feature_dim < 1) {
    fail(ErrorKind::kConfig, "SBM sizes must be positive");
  }
  if (!(p.p_out >= 0.0 && p.p_out < p.p_in && p.p_in <= 1.0)) {
    fail(ErrorKind::kConfig, "SBM probabilities must satisfy 0 <= p_out < p_in <= 1");
  }
  Rng rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  RawGraph g;
  g.num_nodes = p.num_classes * p.nodes_per_class;
  g.labels.resize(g.num_nodes);
  for (NodeId v = 0; v < g.num_nodes; ++v) g.labels[v] = v / p.nodes_per_class;

  Matrix means(p.num_classes, p.feature_dim);
  for (int c = 0; c < p.num_classes; ++c) {
    for (int j = 0; j < p.feature_dim; ++j) means(c, j) = p.mean_scale * normal(rng);
  }

  for (NodeId u = 0; u < g.num_nodes; ++u) {
    for (NodeId v = u + 1; v < g.num_nodes; ++v) {
      const double prob = g.labels[u] == g.labels[v] ? p.p_in : p.p_out;
      if (unit(rng) < prob) g.edges.emplace_back(u, v);
    }
  }

  g.features.resize(g.num_nodes, p.feature_dim);
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    for (int j = 0; j < p.feature_dim; ++j) g.features(v, j) = means(g.labels[v], j) + normal(rng);
  }
  return g;
}

namespace {

bool is_skippable(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

[[noreturn]] void parse_error(const std::filesystem::path& file, int line_no, const std::string& what) {
  fail(ErrorKind::kParse, file.string() + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

RawGraph load_graph(const std::filesystem::path& node_file, const std::filesystem::path& edge_file) {
  std::ifstream nodes_in(node_file);
  if (!nodes_in) fail(ErrorKind::kIo, "cannot open node file " + node_file.string());
  std::ifstream edges_in(edge_file);
  if (!edges_in) fail(ErrorKind::kIo, "cannot open edge file " + edge_file.string());

  RawGraph g;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  int dim = -1;
  while (std::getline(nodes_in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    std::istringstream ss(line);
    long long id = 0;
    long long cls = 0;
    if (!(ss >> id >> cls)) parse_error(node_file, line_no, "expected '<node_id> <class_id> <features...>'");
    if (id != static_cast<long long>(rows.size())) {
      parse_error(node_file, line_no, "node id " + std::to_string(id) + " out of order, expected " +
                                          std::to_string(rows.size()));
    }
    if (cls < 0) parse_error(node_file, line_no, "negative class id");
    std::vector<double> f;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        f.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        parse_error(node_file, line_no, "bad feature value '" + tok + "'");
      }
    }
    if (dim < 0) dim = static_cast<int>(f.size());
    if (static_cast<int>(f.size()) != dim) {
      parse_error(node_file, line_no, "expected " + std::to_string(dim) + " features, found " +
                                          std::to_string(f.size()));
    }
    g.labels.push_back(static_cast<ClassId>(cls));
    rows.push_back(std::move(f));
  }
  g.num_nodes = static_cast<int>(rows.size());
  g.features.resize(g.num_nodes, std::max(dim, 0));
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j = 0; j < dim; ++j) g.features(i, j) = rows[i][j];
  }

  line_no = 0;
  while (std::getline(edges_in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    std::istringstream ss(line);
    long long u = 0;
    long long v = 0;
    std::string extra;
    if (!(ss >> u >> v) || (ss >> extra)) parse_error(edge_file, line_no, "expected '<u> <v>'");
    if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes) {
      fail(ErrorKind::kValidation, edge_file.string() + ":" + std::to_string(line_no) + ": edge (" +
                                       std::to_string(u) + "," + std::to_string(v) +
                                       ") references a node outside [0, " + std::to_string(g.num_nodes) + ")");
    }
    g.edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  // Reversed duplicates collapse to one undirected edge; self-loops are
  // dropped because normalization adds them.
  g.edges = canonical_edges(std::move(g.edges));
  g.validate();
  return g;
}

void save_graph(const RawGraph& raw, const std::filesystem::path& node_file, const std::filesystem::path& edge_file) {
  std::ofstream nodes_out(node_file);
  if (!nodes_out) fail(ErrorKind::kIo, "cannot write " + node_file.string());
  nodes_out << std::setprecision(17);
  for (int v = 0; v < raw.num_nodes; ++v) {
    nodes_out << v << ' ' << raw.labels[v];
    for (int j = 0; j < raw.feature_dim(); ++j) nodes_out << ' ' << raw.features(v, j);
    nodes_out << '\n';
  }
  std::ofstream edges_out(edge_file);
  if (!edges_out) fail(ErrorKind::kIo, "cannot write " + edge_file.string());
  for (const auto& [u, v] : raw.edges) edges_out << u << ' ' << v << '\n';
}

}  // namespace gclreg
