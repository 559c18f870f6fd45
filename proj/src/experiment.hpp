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

#ifndef GCLREG_EXPERIMENT_HPP_
#define GCLREG_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "continual_engine.hpp"
#include "graph_store.hpp"
#include "regularizers.hpp"

namespace gclreg {

// Environment variable that, when set, replaces the configured output root.
inline constexpr const char* kOutputRootEnv = "GCLREG_OUTPUT_ROOT";

struct DatasetSpec {
  enum class Kind { kSbm, kFiles };
  Kind kind = Kind::kSbm;
  SbmParams sbm;
  std::filesystem::path node_file;
  std::filesystem::path edge_file;
};

struct StrategySpec {
  std::string label;  // name used in result files
  RegConfig reg;
  std::optional<double> ema_beta;  // overrides TrainConfig::ema_beta
};

struct ExperimentConfig {
  DatasetSpec dataset;
  int classes_per_task = 2;
  SplitRatio split;
  std::uint64_t schedule_seed = 0;
  TrainConfig train;
  std::vector<StrategySpec> strategies;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::filesystem::path output_dir = "runs";
  std::string source_text;  // the document as read, copied into each run directory
};

// Relative dataset paths are resolved against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Output directory after applying the environment override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

RawGraph load_dataset(const DatasetSpec& spec);

struct ResultRow {
  std::string strategy;
  std::uint64_t seed = 0;
  double ap_final = 0.0;
  std::optional<double> af_final;
};

struct SummaryRow {
  std::string strategy;
  int runs = 0;
  double ap_mean = 0.0;
  std::optional<double> ap_std;  // sample std, needs >= 2 runs
  std::optional<double> af_mean;
  std::optional<double> af_std;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

// Runs the strategy x seed grid. Writes config.json, results.csv, one
// heatmap CSV per cell, run.log and checkpoints/ into `out_dir`.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                      std::ostream* progress = nullptr);

enum class SweepParam { kLambda, kQueueSize, kEmaBeta, kGamma };
SweepParam parse_sweep_param(const std::string& name);
std::string sweep_param_name(SweepParam p);

// Copy of `cfg` with `param` set to `value` on every strategy.
ExperimentConfig with_param(const ExperimentConfig& cfg, SweepParam param, double value);

struct SweepRow {
  double value = 0.0;
  ResultRow result;
};

// One run directory per value under `out_dir`, plus sweep_results.csv and
// sweep_summary.csv sorted by value.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepParam param, std::vector<double> values,
                                const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

}  // namespace gclreg

#endif  // GCLREG_EXPERIMENT_HPP_
