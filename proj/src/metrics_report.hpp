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

#ifndef GCLREG_METRICS_REPORT_HPP_
#define GCLREG_METRICS_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "gcn_model.hpp"
#include "graph_store.hpp"

namespace gclreg {

// M[t][i]: accuracy (percent) on task i's test split after training task t.
// Indices are 1-based; only i <= t is stored.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(int num_tasks);

  int num_tasks() const { return static_cast<int>(rows_.size()); }
  // Number of rows filled so far.
  int completed() const;

  void set_row(int t, std::vector<double> row);
  const std::vector<double>& row(int t) const;
  double at(int t, int i) const;

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::vector<std::vector<double>> rows_;
};

// Percent of `nodes` whose argmax prediction matches the label.
double accuracy(const ForwardTrace& trace, std::span<const NodeId> nodes, std::span<const ClassId> labels);

// Row t of the accuracy matrix: tasks 1..t on their own test split, softmax
// over the classes of tasks 1..t.
std::vector<double> evaluate(const ModelParams& params, const TaskSchedule& schedule, int upto);

double average_performance(const AccuracyMatrix& m, int t);
// Undefined for t = 1.
std::optional<double> average_forgetting(const AccuracyMatrix& m, int t);

void emit_heatmap(const AccuracyMatrix& m, const std::filesystem::path& path);
AccuracyMatrix parse_heatmap(const std::filesystem::path& path);

// Fixed six-decimal rendering used by every CSV this library writes.
std::string format_value(double v);

}  // namespace gclreg

#endif  // GCLREG_METRICS_REPORT_HPP_
