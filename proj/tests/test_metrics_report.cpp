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

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "metrics_report.hpp"
#include "test_util.hpp"

using namespace gclreg;

namespace {

AccuracyMatrix matrix(std::vector<std::vector<double>> rows) {
  AccuracyMatrix m(static_cast<int>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) m.set_row(static_cast<int>(t) + 1, rows[t]);
  return m;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ForwardTrace trace_from_logits(Matrix logits, ClassMask mask) {
  ForwardTrace t;
  t.mask = mask;
  t.probs = masked_softmax(logits, mask);
  t.logits = std::move(logits);
  return t;
}

}  // namespace

TEST_CASE("AP and AF by hand") {
  const AccuracyMatrix m = matrix({{80}, {60, 80}});
  CHECK(average_performance(m, 2) == 70.0);
  CHECK(average_performance(m, 1) == 80.0);
  CHECK(*average_forgetting(m, 2) == -20.0);
  CHECK(!average_forgetting(m, 1).has_value());
}

TEST_CASE("AP of a constant matrix is the constant") {
  const AccuracyMatrix m = matrix({{42.5}, {42.5, 42.5}, {42.5, 42.5, 42.5}});
  for (int t = 1; t <= 3; ++t) CHECK(average_performance(m, t) == 42.5);
}

TEST_CASE("AF sign conventions") {
  CHECK(*average_forgetting(matrix({{70}, {70, 90}, {70, 90, 10}}), 3) == 0.0);
  CHECK(*average_forgetting(matrix({{50}, {65, 90}}), 2) > 0.0);
}

TEST_CASE("AP/AF properties on random matrices") {
  Rng rng(41);
  std::uniform_real_distribution<double> acc(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + trial % 6;
    AccuracyMatrix m(T);
    for (int t = 1; t <= T; ++t) {
      std::vector<double> row;
      for (int i = 1; i <= t; ++i) row.push_back(acc(rng));
      m.set_row(t, row);
    }
    for (int t = 1; t <= T; ++t) {
      const auto& r = m.row(t);
      const double ap = average_performance(m, t);
      CHECK(ap >= *std::min_element(r.begin(), r.end()) - 1e-12);
      CHECK(ap <= *std::max_element(r.begin(), r.end()) + 1e-12);
      bool all_lower = true;
      for (int i = 1; i < t; ++i) all_lower = all_lower && m.at(t, i) <= m.at(i, i);
      if (all_lower && t > 1) CHECK(*average_forgetting(m, t) <= 0.0);
    }
  }
}

TEST_CASE("AccuracyMatrix rejects malformed rows") {
  AccuracyMatrix m(2);
  CHECK_THROWS_AS(m.set_row(1, {1, 2}), Error);
  CHECK_THROWS_AS(m.set_row(3, {1, 2, 3}), Error);
  CHECK_THROWS_AS(m.set_row(1, {101}), Error);
  CHECK(m.completed() == 0);
  m.set_row(1, {50});
  CHECK(m.completed() == 1);
  CHECK_THROWS_AS(m.at(1, 2), Error);
}

TEST_CASE("accuracy: perfect classifier and tie-breaking") {
  Matrix logits = Matrix::Zero(4, 3);
  const std::vector<ClassId> labels{0, 1, 2, 0};
  for (int v = 0; v < 4; ++v) logits(v, labels[v]) = 5.0;
  const std::vector<NodeId> nodes{0, 1, 2, 3};
  CHECK(accuracy(trace_from_logits(logits, ClassMask::all(3)), nodes, labels) == 100.0);
  const Matrix ties = Matrix::Zero(4, 3);
  CHECK(accuracy(trace_from_logits(ties, ClassMask::all(3)), nodes, labels) == 50.0);
}

TEST_CASE("uniform random logits score about one third on three classes") {
  Rng rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 300;
  std::vector<ClassId> labels(n);
  std::vector<NodeId> nodes(n);
  for (int v = 0; v < n; ++v) {
    labels[v] = v % 3;
    nodes[v] = v;
  }
  double total = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    Matrix logits(n, 3);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = normal(rng);
    total += accuracy(trace_from_logits(logits, ClassMask::all(3)), nodes, labels);
  }
  // one run has std 100 * sqrt(2/9 / 300) ~ 2.7 points; the mean of 200 ~ 0.19
  CHECK(std::abs(total / seeds - 100.0 / 3.0) <= 1.0);
}

TEST_CASE("evaluate never predicts classes of future tasks") {
  SbmParams p;
  p.num_classes = 4;
  p.nodes_per_class = 10;
  p.feature_dim = 3;
  p.seed = 5;
  const TaskSchedule s = build_schedule(generate_sbm_stream(p), 2, {}, 1);
  // Only the output bias is nonzero and it strongly prefers class 3.
  ModelParams params(ModelShape{3, 2, 4});
  params.layer2()(2, 3) = 100.0;
  params.layer2()(2, 0) = 1.0;
  const std::vector<double> row = evaluate(params, s, 1);
  CHECK(row.size() == 1);
  const ForwardTrace tr = forward(params, s.tasks[0].input, s.seen_classes(1));
  for (NodeId v = 0; v < s.tasks[0].subgraph.num_nodes; ++v) CHECK(predict(tr, v) == 0);
  CHECK(row[0] == doctest::Approx(50.0));
  CHECK(evaluate(params, s, 2) == evaluate(params, s, 2));
}

TEST_CASE("heatmap CSV layout and round trip") {
  const auto dir = testing::scratch_dir("heatmap");
  const AccuracyMatrix m = matrix({{91.25}, {12.5, 88.0}});
  emit_heatmap(m, dir / "h.csv");
  CHECK(slurp(dir / "h.csv") == "after_task,task_1,task_2\n1,91.250000,\n2,12.500000,88.000000\n");
  const AccuracyMatrix back = parse_heatmap(dir / "h.csv");
  for (int t = 1; t <= 2; ++t) {
    for (int i = 1; i <= t; ++i) CHECK(std::abs(back.at(t, i) - m.at(t, i)) <= 1e-6);
  }

  Rng rng(43);
  std::uniform_real_distribution<double> acc(0.0, 100.0);
  AccuracyMatrix r(5);
  for (int t = 1; t <= 5; ++t) {
    std::vector<double> row;
    for (int i = 1; i <= t; ++i) row.push_back(acc(rng));
    r.set_row(t, row);
  }
  emit_heatmap(r, dir / "r.csv");
  const AccuracyMatrix rb = parse_heatmap(dir / "r.csv");
  for (int t = 1; t <= 5; ++t) {
    for (int i = 1; i <= t; ++i) CHECK(std::abs(rb.at(t, i) - r.at(t, i)) <= 1e-6);
  }
}

TEST_CASE("parse_heatmap rejects filled upper triangles") {
  const auto dir = testing::scratch_dir("heatmap_bad");
  std::ofstream(dir / "bad.csv") << "after_task,task_1,task_2\n1,50.0,20.0\n2,1.0,2.0\n";
  CHECK_THROWS_AS(parse_heatmap(dir / "bad.csv"), Error);
  std::ofstream(dir / "short.csv") << "after_task,task_1,task_2\n1,50.0,\n";
  CHECK_THROWS_AS(parse_heatmap(dir / "short.csv"), Error);
}

TEST_CASE("format_value uses six decimals") {
  CHECK(format_value(1.0 / 3.0) == "0.333333");
  CHECK(format_value(-20.0) == "-20.000000");
}
