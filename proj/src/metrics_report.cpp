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

#include "metrics_report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gclreg {

AccuracyMatrix::AccuracyMatrix(int num_tasks) : rows_(num_tasks) {
  if (num_tasks < 0) fail(ErrorKind::kValidation, "negative task count");
}

int AccuracyMatrix::completed() const {
  int n = 0;
  while (n < num_tasks() && !rows_[n].empty()) ++n;
  return n;
}

void AccuracyMatrix::set_row(int t, std::vector<double> row) {
  if (t < 1 || t > num_tasks()) fail(ErrorKind::kValidation, "row index out of range");
  if (static_cast<int>(row.size()) != t) fail(ErrorKind::kShape, "row t must hold exactly t accuracies");
  for (double a : row) {
    if (!(a >= 0.0 && a <= 100.0)) fail(ErrorKind::kValidation, "accuracy outside [0, 100]");
  }
  rows_[t - 1] = std::move(row);
}

const std::vector<double>& AccuracyMatrix::row(int t) const {
  if (t < 1 || t > num_tasks()) fail(ErrorKind::kValidation, "row index out of range");
  return rows_[t - 1];
}

double AccuracyMatrix::at(int t, int i) const {
  const auto& r = row(t);
  if (i < 1 || i > static_cast<int>(r.size())) fail(ErrorKind::kValidation, "entry outside the filled triangle");
  return r[i - 1];
}

double accuracy(const ForwardTrace& trace, std::span<const NodeId> nodes, std::span<const ClassId> labels) {
  if (nodes.empty()) return 0.0;
  std::size_t correct = 0;
  for (NodeId v : nodes) correct += predict(trace, v) == labels[v] ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(nodes.size());
}

std::vector<double> evaluate(const ModelParams& params, const TaskSchedule& schedule, int upto) {
  if (upto < 1 || upto > schedule.num_tasks()) fail(ErrorKind::kValidation, "evaluation step out of range");
  const ClassMask mask = schedule.seen_classes(upto);
  std::vector<double> row;
  row.reserve(upto);
  for (int i = 0; i < upto; ++i) {
    const TaskGraph& task = schedule.tasks[i];
    row.push_back(accuracy(forward(params, task.input, mask), task.test, task.labels()));
  }
  return row;
}

double average_performance(const AccuracyMatrix& m, int t) {
  const auto& r = m.row(t);
  if (static_cast<int>(r.size()) != t) fail(ErrorKind::kValidation, "row " + std::to_string(t) + " is incomplete");
  double sum = 0.0;
  for (double a : r) sum += a;
  return sum / t;
}

std::optional<double> average_forgetting(const AccuracyMatrix& m, int t) {
  if (t < 2) return std::nullopt;
  double sum = 0.0;
  for (int i = 1; i < t; ++i) sum += m.at(t, i) - m.at(i, i);
  return sum / (t - 1);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void emit_heatmap(const AccuracyMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write heatmap " + path.string());
  const int T = m.num_tasks();
  out << "after_task";
  for (int i = 1; i <= T; ++i) out << ",task_" << i;
  out << '\n';
  for (int t = 1; t <= T; ++t) {
    out << t;
    for (int i = 1; i <= T; ++i) {
      out << ',';
      if (i <= t) out << format_value(m.at(t, i));
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

AccuracyMatrix parse_heatmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read heatmap " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kParse, path.string() + ": empty heatmap");
  int T = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "after_task") fail(ErrorKind::kParse, path.string() + ":1: expected 'after_task' header");
    while (std::getline(ss, cell, ',')) {
      ++T;
      if (cell != "task_" + std::to_string(T)) fail(ErrorKind::kParse, path.string() + ":1: bad column '" + cell + "'");
    }
  }
  AccuracyMatrix m(T);
  for (int t = 1; t <= T; ++t) {
    if (!std::getline(in, line)) fail(ErrorKind::kParse, path.string() + ": missing row " + std::to_string(t));
    // Keep trailing empty cells: split manually.
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(cells.size()) != T + 1 || cells[0] != std::to_string(t)) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(t + 1) + ": malformed row");
    }
    std::vector<double> row;
    for (int i = 1; i <= T; ++i) {
      if (i <= t) {
        try {
          row.push_back(std::stod(cells[i]));
        } catch (const std::exception&) {
          fail(ErrorKind::kParse, path.string() + ":" + std::to_string(t + 1) + ": bad value '" + cells[i] + "'");
        }
      } else if (!cells[i].empty()) {
        fail(ErrorKind::kParse, path.string() + ":" + std::to_string(t + 1) + ": upper triangle must be blank");
      }
    }
    m.set_row(t, std::move(row));
  }
  return m;
}

}  // namespace gclreg
