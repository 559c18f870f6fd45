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

#include <cmath>

#include "gcn_model.hpp"
#include "test_util.hpp"

using namespace gclreg;
using gclreg::testing::finite_difference;
using gclreg::testing::max_rel_error;
using gclreg::testing::reference_log_prob;
using gclreg::testing::reference_logits;
using gclreg::testing::tiny_instance;

namespace {

GraphInput single_node(double x) {
  RawGraph g;
  g.num_nodes = 1;
  g.features = Matrix::Constant(1, 1, x);
  g.labels = {0};
  return GraphInput(normalize_adjacency(g), g.features);
}

}  // namespace

TEST_CASE("zero parameters give uniform probabilities and ln C loss") {
  Rng rng(1);
  auto t = tiny_instance(rng, 5, 3, 4, 2);
  const ModelParams zero(t.params.shape());
  const ForwardTrace tr = forward(zero, t.input, t.mask);
  CHECK(tr.logits.cwiseAbs().maxCoeff() == 0.0);
  CHECK((tr.probs.array() - 0.5).abs().maxCoeff() == 0.0);
  const std::vector<NodeId> batch{2};
  const LossGrad lg = loss_and_grad(zero, t.input, t.mask, batch, t.raw.labels);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("hand-traced single node") {
  // x = 2, W1 = [[1],[0]], W2 = [[1,0],[0,0]]: hidden relu(2) = 2, logits (2, 0).
  ModelParams p(ModelShape{1, 1, 2});
  p.layer1()(0, 0) = 1.0;
  p.layer2()(0, 0) = 1.0;
  const ForwardTrace tr = forward(p, single_node(2.0), ClassMask::all(2));
  CHECK(tr.logits(0, 0) == doctest::Approx(2.0));
  CHECK(tr.logits(0, 1) == doctest::Approx(0.0));
  CHECK(tr.probs(0, 0) == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)));
}

TEST_CASE("forward matches an independent loop implementation") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = tiny_instance(rng, 7, 3, 5, 4);
    const ForwardTrace tr = forward(t.params, t.input, t.mask);
    const Matrix ref = reference_logits(t.raw, t.params.flat(), 5, 4);
    CHECK((tr.logits - ref).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((tr.probs.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("permutation equivariance") {
  Rng rng(3);
  auto t = tiny_instance(rng, 6, 3, 4, 3);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};  // new id i holds old node perm[i]
  std::vector<int> inverse(6);
  for (int i = 0; i < 6; ++i) inverse[perm[i]] = i;
  RawGraph q;
  q.num_nodes = 6;
  q.features.resize(6, 3);
  q.labels.resize(6);
  for (int i = 0; i < 6; ++i) {
    q.features.row(i) = t.raw.features.row(perm[i]);
    q.labels[i] = t.raw.labels[perm[i]];
  }
  for (const auto& [u, v] : t.raw.edges) q.edges.emplace_back(inverse[u], inverse[v]);
  q.edges = canonical_edges(q.edges);
  const ForwardTrace a = forward(t.params, t.input, t.mask);
  const ForwardTrace b = forward(t.params, GraphInput(normalize_adjacency(q), q.features), t.mask);
  for (int i = 0; i < 6; ++i) CHECK((b.logits.row(i) - a.logits.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("masked classes get exactly zero probability") {
  Rng rng(4);
  auto t = tiny_instance(rng, 5, 2, 3, 4);
  const ClassMask mask = ClassMask::of(4, {0, 2});
  const ForwardTrace tr = forward(t.params, t.input, mask);
  CHECK(tr.probs.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.probs.col(3).cwiseAbs().maxCoeff() == 0.0);
  for (NodeId v = 0; v < 5; ++v) {
    const ClassId y = predict(tr, v);
    CHECK((y == 0 || y == 2));
  }
}

TEST_CASE("softmax shift invariance") {
  Rng rng(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  Matrix logits(8, 5);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = normal(rng);
  const ClassMask mask = ClassMask::all(5);
  Matrix shifted = logits;
  for (Eigen::Index v = 0; v < 8; ++v) shifted.row(v).array() += normal(rng) * 10.0;
  CHECK((masked_softmax(logits, mask) - masked_softmax(shifted, mask)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("batch gradient matches central differences of an independent loss") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = tiny_instance(rng, 6, 3, 4, 3);
    const std::vector<NodeId> batch{0, 2, 3, 5};
    const ClassMask mask = trial % 2 == 0 ? t.mask : ClassMask::of(3, {0, 1});
    auto labels = t.raw.labels;
    for (auto& y : labels) y = trial % 2 == 0 ? y : y % 2;
    auto loss = [&](const Vector& theta) {
      const Matrix z = reference_logits(t.raw, theta, 4, 3);
      double s = 0.0;
      for (NodeId v : batch) s -= reference_log_prob(z, v, labels[v], mask);
      return s;
    };
    const LossGrad lg = loss_and_grad(t.params, t.input, mask, batch, labels);
    CHECK(lg.loss == doctest::Approx(loss(t.params.flat())).epsilon(1e-12));
    CHECK(max_rel_error(lg.grad, finite_difference(loss, t.params.flat())) <= 1e-5);
  }
}

TEST_CASE("per-sample gradient matches central differences") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = tiny_instance(rng, 5, 2, 3, 3);
    const NodeId v = trial % 5;
    const ClassId y = trial % 3;
    auto f = [&](const Vector& theta) {
      return reference_log_prob(reference_logits(t.raw, theta, 3, 3), v, y, t.mask);
    };
    const PerSampleGrad g = per_sample_loglik_grad(t.params, t.input, t.mask, v, y);
    CHECK(g.node == v);
    CHECK(g.label == y);
    CHECK(g.params_hash == params_hash(t.params.flat()));
    CHECK(max_rel_error(g.grad, finite_difference(f, t.params.flat())) <= 1e-5);
  }
}

TEST_CASE("per-sample gradients sum to minus the batch gradient") {
  Rng rng(8);
  auto t = tiny_instance(rng, 8, 3, 4, 3);
  const std::vector<NodeId> batch{1, 4, 6, 7};
  const LossGrad lg = loss_and_grad(t.params, t.input, t.mask, batch, t.raw.labels);
  Vector sum = Vector::Zero(t.params.dim());
  for (NodeId v : batch) sum += per_sample_loglik_grad(t.params, t.input, t.mask, v, t.raw.labels[v]).grad;
  CHECK((sum + lg.grad).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("loss and gradient are additive over disjoint batches") {
  Rng rng(9);
  auto t = tiny_instance(rng, 8, 3, 4, 3);
  const std::vector<NodeId> b1{0, 3}, b2{5, 6, 7}, all{0, 3, 5, 6, 7};
  const auto l1 = loss_and_grad(t.params, t.input, t.mask, b1, t.raw.labels);
  const auto l2 = loss_and_grad(t.params, t.input, t.mask, b2, t.raw.labels);
  const auto l = loss_and_grad(t.params, t.input, t.mask, all, t.raw.labels);
  CHECK(l.loss == doctest::Approx(l1.loss + l2.loss).epsilon(1e-13));
  CHECK((l.grad - l1.grad - l2.grad).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("bias-only gradient equals onehot minus probability") {
  // Zero weights leave only the output bias row active: g_c = 1{c=y} - P_c.
  ModelParams p(ModelShape{1, 1, 3});
  p.layer2()(1, 0) = 0.3;
  p.layer2()(1, 1) = -0.2;
  p.layer2()(1, 2) = 1.1;
  const GraphInput in = single_node(0.0);
  const ClassMask mask = ClassMask::all(3);
  const ForwardTrace tr = forward(p, in, mask);
  const PerSampleGrad g = per_sample_loglik_grad(p, in, mask, 0, 1);
  Eigen::Map<const RowMatrix> g2(g.grad.data() + p.shape().layer1_size(), 2, 3);
  for (int c = 0; c < 3; ++c) CHECK(g2(1, c) == doctest::Approx((c == 1 ? 1.0 : 0.0) - tr.probs(0, c)));
}

TEST_CASE("label validation") {
  Rng rng(10);
  auto t = tiny_instance(rng, 4, 2, 3, 3);
  CHECK_THROWS_AS(per_sample_loglik_grad(t.params, t.input, ClassMask::of(3, {0, 1}), 0, 2), Error);
  CHECK_THROWS_AS(per_sample_loglik_grad(t.params, t.input, t.mask, 0, 5), Error);
}

TEST_CASE("sample_label: degenerate and uniform distributions") {
  ForwardTrace tr;
  tr.mask = ClassMask::all(4);
  tr.probs = Matrix::Zero(2, 4);
  tr.logits = Matrix::Zero(2, 4);
  tr.probs(0, 0) = 1.0;
  tr.probs.row(1).setConstant(0.25);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) CHECK(sample_label(tr, 0, rng) == 0);

  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[sample_label(tr, 1, rng)];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - n * 0.25) <= 3.0 * sigma);

  Rng a(12), b(12);
  for (int i = 0; i < 100; ++i) CHECK(sample_label(tr, 1, a) == sample_label(tr, 1, b));
}

TEST_CASE("predict breaks ties toward the lowest class id") {
  ForwardTrace tr;
  tr.mask = ClassMask::of(3, {1, 2});
  tr.logits = Matrix::Zero(1, 3);
  tr.probs = masked_softmax(tr.logits, tr.mask);
  CHECK(predict(tr, 0) == 1);
}

TEST_CASE("glorot init is seeded and leaves biases at zero") {
  const ModelShape s{4, 6, 3};
  Rng a(13), b(13);
  const ModelParams p = ModelParams::glorot(s, a);
  const ModelParams q = ModelParams::glorot(s, b);
  CHECK(p.flat() == q.flat());
  CHECK(p.layer1().row(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.layer2().row(6).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.layer1().cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 10.0));
  CHECK(p.dim() == 5 * 6 + 7 * 3);
}
