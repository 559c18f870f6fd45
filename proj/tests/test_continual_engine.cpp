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
#include <cstring>
#include <set>
#include <sstream>

#include "continual_engine.hpp"
#include "test_util.hpp"

using namespace gclreg;

namespace {

TaskSchedule small_stream(std::uint64_t seed = 1) {
  SbmParams p;
  p.num_classes = 6;
  p.nodes_per_class = 20;
  p.feature_dim = 6;
  p.p_in = 0.2;
  p.p_out = 0.01;
  p.seed = seed;
  return build_schedule(generate_sbm_stream(p), 2, {}, seed);
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 4;
  c.batch_size = 8;
  c.learning_rate = 0.01;
  c.hidden_dim = 8;
  c.seed = 3;
  return c;
}

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// Records what the engine hands to a strategy.
class SpyRegularizer final : public Regularizer {
 public:
  SpyRegularizer() : Regularizer(RegConfig{StrategyKind::kNone, 0.0, 1.0, 2.0, 3}) {}
  void begin_task(const TaskContext& ctx, const ModelParams& params) override {
    anchors_at_begin.push_back(ctx.anchors.size());
    dims.push_back(params.dim());
    first_step = true;
  }
  Penalty step(const StepContext& ctx, Rng&) override {
    if (first_step) cache_at_first_step.push_back(ctx.cache.size());
    first_step = false;
    ctx.cache.push(PerSampleGrad{ctx.batch[0], 0, Vector::Zero(ctx.params.dim()), 0});
    max_cache = std::max(max_cache, ctx.cache.size());
    return {};
  }
  void end_task(const TaskContext&, const ModelParams& anchor_params, Anchor& anchor, Rng&) override {
    anchor_matches_params.push_back(anchor_params.flat() == anchor.theta);
  }

  std::vector<std::size_t> anchors_at_begin;
  std::vector<std::size_t> cache_at_first_step;
  std::vector<Eigen::Index> dims;
  std::vector<bool> anchor_matches_params;
  std::size_t max_cache = 0;
  bool first_step = false;
};

}  // namespace

TEST_CASE("EMA snapshot") {
  Vector prev(1), cur(1);
  prev << 0.0;
  cur << 2.0;
  CHECK(ema_snapshot(prev, cur, 0.5)(0) == 1.0);
  CHECK(ema_snapshot(prev, cur, 0.0)(0) == 2.0);
  CHECK(ema_snapshot(prev, cur, 1.0)(0) == 0.0);
  CHECK_THROWS_AS(ema_snapshot(Vector::Zero(2), cur, 0.5), Error);
}

TEST_CASE("Adam leaves parameters alone on a zero gradient without decay") {
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  Vector theta(3);
  theta << 1.0, -2.0, 3.0;
  const Vector before = theta;
  AdamMoments m;
  adam_step(theta, Vector::Zero(3), m, cfg);
  CHECK(theta == before);
  CHECK(m.step == 1);
}

TEST_CASE("Adam single step by hand") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.1;
  Vector theta(2), grad(2);
  theta << 1.0, -0.5;
  grad << 0.5, 0.0;
  AdamMoments m;
  adam_step(theta, grad, m, cfg);
  // coordinate 0: g = 0.5 + 0.1 * 1 = 0.6; m = 0.06, v = 0.00036; m_hat = 0.6, v_hat = 0.36
  CHECK(theta(0) == doctest::Approx(1.0 - 0.1 * 0.6 / (0.6 + 1e-8)).epsilon(1e-15));
  // coordinate 1: g = -0.05, so the step is +0.1 * 0.05 / (0.05 + 1e-8)
  CHECK(theta(1) == doctest::Approx(-0.5 + 0.1 * 0.05 / (0.05 + 1e-8)).epsilon(1e-15));
  CHECK(m.first(0) == doctest::Approx(0.06));
  CHECK(m.second(0) == doctest::Approx(0.00036));

  // second step reuses the moments
  adam_step(theta, grad, m, cfg);
  const double g0 = 0.5 + 0.1 * (1.0 - 0.1 * 0.6 / (0.6 + 1e-8));
  const double m1 = 0.9 * 0.06 + 0.1 * g0;
  const double v1 = 0.999 * 0.00036 + 0.001 * g0 * g0;
  const double m_hat = m1 / (1 - 0.81);
  const double v_hat = v1 / (1 - 0.999 * 0.999);
  CHECK(m.step == 2);
  CHECK(theta(0) == doctest::Approx(1.0 - 0.1 * 0.6 / (0.6 + 1e-8) - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8)));
}

TEST_CASE("make_batches") {
  const std::vector<NodeId> nodes{10, 11, 12, 13, 14};
  Rng rng(1);
  const auto b = make_batches(nodes, 2, rng);
  REQUIRE(b.size() == 3);
  CHECK(b[0].size() == 2);
  CHECK(b[1].size() == 2);
  CHECK(b[2].size() == 1);
  std::multiset<NodeId> all;
  for (const auto& batch : b) all.insert(batch.begin(), batch.end());
  CHECK(all == std::multiset<NodeId>(nodes.begin(), nodes.end()));

  Rng a(7), c(7);
  CHECK(make_batches(nodes, 2, a) == make_batches(nodes, 2, c));
  CHECK_THROWS_AS(make_batches(nodes, 0, a), Error);
}

TEST_CASE("TrainConfig defaults and validation") {
  const TrainConfig c;
  CHECK(c.hidden_dim == 256);
  CHECK(c.batch_size == 128);
  CHECK(c.learning_rate == 1e-5);
  CHECK(c.weight_decay == 5e-4);
  CHECK(c.ema_beta == 0.5);
  TrainConfig bad = c;
  bad.ema_beta = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("engine bookkeeping: anchors, cache resets, fixed dimension") {
  const TaskSchedule s = small_stream();
  const TrainConfig cfg = quick_config();
  const ModelShape shape{s.tasks[0].input.feature_dim(), cfg.hidden_dim, s.output_dim};
  TrainState state = init_state(shape, cfg);
  SpyRegularizer spy;
  for (const TaskGraph& t : s.tasks) {
    train_task(state, s, t, cfg, spy);
    CHECK(state.anchors.size() == static_cast<std::size_t>(t.task_id));
    CHECK(state.params.flat() == state.anchors.back().theta);
  }
  CHECK(spy.anchors_at_begin == std::vector<std::size_t>{0, 1, 2});
  CHECK(spy.cache_at_first_step == std::vector<std::size_t>{0, 0, 0});
  CHECK(spy.max_cache <= 3);
  for (auto d : spy.dims) CHECK(d == shape.dim());
  for (bool b : spy.anchor_matches_params) CHECK(b);
}

TEST_CASE("tasks must be presented in order") {
  const TaskSchedule s = small_stream();
  const TrainConfig cfg = quick_config();
  TrainState state = init_state(ModelShape{s.tasks[0].input.feature_dim(), cfg.hidden_dim, s.output_dim}, cfg);
  SpyRegularizer spy;
  CHECK_THROWS_AS(train_task(state, s, s.tasks[1], cfg, spy), Error);
}

TEST_CASE("EMA anchors interpolate between snapshots") {
  const TaskSchedule s = small_stream();
  TrainConfig cfg = quick_config();
  cfg.ema_beta = 0.5;
  const ModelShape shape{s.tasks[0].input.feature_dim(), cfg.hidden_dim, s.output_dim};
  TrainState state = init_state(shape, cfg);
  const Vector init = state.params.flat();
  RegConfig none;
  none.kind = StrategyKind::kNone;
  auto reg = make_regularizer(none);

  // Replay the first task without EMA to get the raw endpoint.
  TrainConfig raw_cfg = cfg;
  raw_cfg.ema_beta = 0.0;
  TrainState raw = init_state(shape, raw_cfg);
  train_task(raw, s, s.tasks[0], raw_cfg, *reg);
  train_task(state, s, s.tasks[0], cfg, *reg);
  CHECK((state.params.flat() - (0.5 * init + 0.5 * raw.params.flat())).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("zero strength reproduces plain fine-tuning bit for bit") {
  const TaskSchedule s = small_stream(2);
  const TrainConfig cfg = quick_config();
  RegConfig none;
  none.kind = StrategyKind::kNone;
  const StreamResult base = run_stream(s, cfg, none);
  for (auto k : {StrategyKind::kEwcEmpirical, StrategyKind::kEwcSampled, StrategyKind::kEwcPredicted,
                 StrategyKind::kOnlineEwc, StrategyKind::kMas, StrategyKind::kLwf, StrategyKind::kOurs}) {
    RegConfig rc;
    rc.kind = k;
    rc.lambda = 0.0;
    const StreamResult r = run_stream(s, cfg, rc);
    CHECK_MESSAGE(bitwise_equal(r.final_params.flat(), base.final_params.flat()), strategy_name(k));
    CHECK(r.accuracy == base.accuracy);
  }
}

TEST_CASE("identical config and seed give identical runs and logs") {
  const TaskSchedule s = small_stream(3);
  const TrainConfig cfg = quick_config();
  const RegConfig ours;
  std::ostringstream log1, log2;
  const StreamResult a = run_stream(s, cfg, ours, TaskLogger{&log1});
  const StreamResult b = run_stream(s, cfg, ours, TaskLogger{&log2});
  CHECK(bitwise_equal(a.final_params.flat(), b.final_params.flat()));
  CHECK(a.accuracy == b.accuracy);
  CHECK(log1.str() == log2.str());
  CHECK(log1.str().find("task=3 epoch=4 loss=") != std::string::npos);
  CHECK(a.accuracy.completed() == 3);

  TrainConfig other = cfg;
  other.seed = 4;
  CHECK(!bitwise_equal(run_stream(s, other, ours).final_params.flat(), a.final_params.flat()));
}

TEST_CASE("every strategy runs end to end") {
  const TaskSchedule s = small_stream(4);
  const TrainConfig cfg = quick_config();
  for (auto k : {StrategyKind::kNone, StrategyKind::kEwcEmpirical, StrategyKind::kEwcSampled,
                 StrategyKind::kEwcPredicted, StrategyKind::kOnlineEwc, StrategyKind::kMas, StrategyKind::kLwf,
                 StrategyKind::kOurs}) {
    RegConfig rc;
    rc.kind = k;
    rc.lambda = 1.0;
    const StreamResult r = run_stream(s, cfg, rc);
    CHECK(r.accuracy.completed() == 3);
    CHECK(r.final_params.flat().allFinite());
  }
}
