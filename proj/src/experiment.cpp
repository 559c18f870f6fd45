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

#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "checkpoint.hpp"
#include "metrics_report.hpp"

namespace gclreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(ErrorKind::kConfig, where + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) fail(ErrorKind::kConfig, "unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kConfig, where + "." + key + " has the wrong type");
  }
}

std::uint64_t read_seed(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(ErrorKind::kConfig, where + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

DatasetSpec parse_dataset(const json& j, const fs::path& base_dir) {
  DatasetSpec d;
  std::string type = "sbm";
  if (j.is_object()) read(j, "type", type, "dataset");
  if (type == "sbm") {
    check_keys(j, "dataset", {"type", "num_classes", "nodes_per_class", "feature_dim", "p_in", "p_out", "mean_scale",
                              "seed"});
    d.kind = DatasetSpec::Kind::kSbm;
    read(j, "num_classes", d.sbm.num_classes, "dataset");
    read(j, "nodes_per_class", d.sbm.nodes_per_class, "dataset");
    read(j, "feature_dim", d.sbm.feature_dim, "dataset");
    read(j, "p_in", d.sbm.p_in, "dataset");
    read(j, "p_out", d.sbm.p_out, "dataset");
    read(j, "mean_scale", d.sbm.mean_scale, "dataset");
    if (j.contains("seed")) d.sbm.seed = read_seed(j["seed"], "dataset.seed");
    if (d.sbm.num_classes < 1 || d.sbm.nodes_per_class < 1 || d.sbm.feature_dim < 1) {
      fail(ErrorKind::kConfig, "dataset sizes must be positive");
    }
    if (!(d.sbm.p_out >= 0.0 && d.sbm.p_out < d.sbm.p_in && d.sbm.p_in <= 1.0)) {
      fail(ErrorKind::kConfig, "dataset probabilities must satisfy 0 <= p_out < p_in <= 1");
    }
  } else if (type == "files") {
    check_keys(j, "dataset", {"type", "node_file", "edge_file"});
    d.kind = DatasetSpec::Kind::kFiles;
    std::string nodes;
    std::string edges;
    read(j, "node_file", nodes, "dataset");
    read(j, "edge_file", edges, "dataset");
    if (nodes.empty() || edges.empty()) fail(ErrorKind::kConfig, "dataset of type 'files' needs node_file and edge_file");
    d.node_file = fs::path(nodes).is_absolute() ? fs::path(nodes) : base_dir / nodes;
    d.edge_file = fs::path(edges).is_absolute() ? fs::path(edges) : base_dir / edges;
    for (const fs::path& p : {d.node_file, d.edge_file}) {
      if (!fs::is_regular_file(p)) fail(ErrorKind::kConfig, "dataset file not found: " + p.string());
    }
  } else {
    fail(ErrorKind::kConfig, "dataset.type must be 'sbm' or 'files', got '" + type + "'");
  }
  return d;
}

StrategySpec parse_strategy_spec(const json& j, std::size_t index) {
  const std::string where = "strategies[" + std::to_string(index) + "]";
  StrategySpec s;
  if (j.is_string()) {
    s.reg.kind = parse_strategy(j.get<std::string>());
    s.label = j.get<std::string>();
  } else {
    check_keys(j, where, {"name", "label", "lambda", "lambda_dist", "gamma", "T", "M", "ema_beta"});
    std::string name;
    read(j, "name", name, where);
    if (name.empty()) fail(ErrorKind::kConfig, where + " needs a name");
    s.reg.kind = parse_strategy(name);
    s.label = name;
    read(j, "label", s.label, where);
    read(j, "lambda", s.reg.lambda, where);
    if (j.contains("lambda_dist")) {
      if (s.reg.kind != StrategyKind::kLwf) fail(ErrorKind::kConfig, where + ": lambda_dist only applies to lwf");
      if (j.contains("lambda")) fail(ErrorKind::kConfig, where + ": give either lambda or lambda_dist, not both");
      read(j, "lambda_dist", s.reg.lambda, where);
    }
    read(j, "gamma", s.reg.gamma, where);
    read(j, "T", s.reg.temperature, where);
    read(j, "M", s.reg.queue_capacity, where);
    if (j.contains("ema_beta")) {
      double beta = 0.0;
      read(j, "ema_beta", beta, where);
      s.ema_beta = beta;
    }
  }
  if (s.reg.kind == StrategyKind::kNone && !j.is_object()) s.reg.lambda = 0.0;
  if (s.reg.kind == StrategyKind::kNone && j.is_object() && !j.contains("lambda")) s.reg.lambda = 0.0;
  s.reg.validate();
  if (s.ema_beta && !(*s.ema_beta >= 0.0 && *s.ema_beta <= 1.0)) fail(ErrorKind::kConfig, where + ".ema_beta outside [0, 1]");
  if (s.label.empty() || s.label.find_first_of(",/\\\n\" ") != std::string::npos) {
    fail(ErrorKind::kConfig, where + ".label must be nonempty and free of commas, slashes, quotes and spaces");
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config", {"dataset", "schedule", "train", "strategies", "seeds", "output_dir"});

  ExperimentConfig cfg;
  cfg.source_text = json_text;
  if (root.contains("dataset")) cfg.dataset = parse_dataset(root["dataset"], base_dir);

  if (root.contains("schedule")) {
    const json& s = root["schedule"];
    check_keys(s, "schedule", {"classes_per_task", "split", "seed"});
    read(s, "classes_per_task", cfg.classes_per_task, "schedule");
    if (s.contains("split")) {
      std::vector<double> r;
      read(s, "split", r, "schedule");
      if (r.size() != 3) fail(ErrorKind::kConfig, "schedule.split must list three fractions");
      cfg.split = {r[0], r[1], r[2]};
    }
    if (s.contains("seed")) cfg.schedule_seed = read_seed(s["seed"], "schedule.seed");
  }
  if (cfg.classes_per_task < 1) fail(ErrorKind::kConfig, "schedule.classes_per_task must be >= 1");
  if (cfg.split.train < 0 || cfg.split.val < 0 || cfg.split.test < 0 ||
      std::abs(cfg.split.train + cfg.split.val + cfg.split.test - 1.0) > 1e-9) {
    fail(ErrorKind::kConfig, "schedule.split fractions must be nonnegative and sum to 1");
  }

  if (root.contains("train")) {
    const json& t = root["train"];
    check_keys(t, "train", {"epochs", "batch_size", "learning_rate", "weight_decay", "ema_beta", "adam_beta1",
                            "adam_beta2", "adam_eps", "hidden_dim"});
    read(t, "epochs", cfg.train.epochs, "train");
    read(t, "batch_size", cfg.train.batch_size, "train");
    read(t, "learning_rate", cfg.train.learning_rate, "train");
    read(t, "weight_decay", cfg.train.weight_decay, "train");
    read(t, "ema_beta", cfg.train.ema_beta, "train");
    read(t, "adam_beta1", cfg.train.adam_beta1, "train");
    read(t, "adam_beta2", cfg.train.adam_beta2, "train");
    read(t, "adam_eps", cfg.train.adam_eps, "train");
    read(t, "hidden_dim", cfg.train.hidden_dim, "train");
  }
  cfg.train.validate();

  if (root.contains("strategies")) {
    const json& list = root["strategies"];
    if (!list.is_array()) fail(ErrorKind::kConfig, "strategies must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) cfg.strategies.push_back(parse_strategy_spec(list[i], i));
  } else {
    cfg.strategies.push_back(StrategySpec{"ours", RegConfig{}, std::nullopt});
  }
  if (cfg.strategies.empty()) fail(ErrorKind::kConfig, "at least one strategy is required");
  std::set<std::string> labels;
  for (const auto& s : cfg.strategies) {
    if (!labels.insert(s.label).second) fail(ErrorKind::kConfig, "duplicate strategy label '" + s.label + "'");
  }

  if (root.contains("seeds")) {
    const json& seeds = root["seeds"];
    if (!seeds.is_array()) fail(ErrorKind::kConfig, "seeds must be an array");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < seeds.size(); ++i) cfg.seeds.push_back(read_seed(seeds[i], "seeds[" + std::to_string(i) + "]"));
  }
  if (cfg.seeds.empty()) fail(ErrorKind::kConfig, "at least one seed is required");

  if (root.contains("output_dir")) {
    std::string out;
    read(root, "output_dir", out, "config");
    if (out.empty()) fail(ErrorKind::kConfig, "output_dir must be nonempty");
    cfg.output_dir = fs::path(out).is_absolute() ? fs::path(out) : base_dir / out;
  } else {
    cfg.output_dir = base_dir / "runs";
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') return fs::path(root);
  return cfg.output_dir;
}

RawGraph load_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::kFiles) return load_graph(spec.node_file, spec.edge_file);
  return generate_sbm_stream(spec.sbm);
}

namespace {

std::string optional_value(const std::optional<double>& v) { return v ? format_value(*v) : "NA"; }

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::optional<double> sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::kIo, "cannot create directory " + dir.string());
}

std::string value_tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void write_results_csv(const std::vector<ResultRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "strategy,seed,AP_final,AF_final\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.seed << ',' << format_value(r.ap_final) << ',' << optional_value(r.af_final) << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.strategy)) order.push_back(r.strategy);
    auto& g = groups[r.strategy];
    g.first.push_back(r.ap_final);
    if (r.af_final) g.second.push_back(*r.af_final);
  }
  std::vector<SummaryRow> out;
  for (const auto& name : order) {
    const auto& [ap, af] = groups[name];
    SummaryRow s;
    s.strategy = name;
    s.runs = static_cast<int>(ap.size());
    s.ap_mean = mean(ap);
    s.ap_std = sample_std(ap);
    if (!af.empty()) {
      s.af_mean = mean(af);
      s.af_std = sample_std(af);
    }
    out.push_back(s);
  }
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream* progress) {
  const RawGraph raw = load_dataset(cfg.dataset);
  const TaskSchedule schedule = build_schedule(raw, cfg.classes_per_task, cfg.split, cfg.schedule_seed);

  ensure_dir(out_dir);
  ensure_dir(out_dir / "checkpoints");
  {
    std::ofstream copy(out_dir / "config.json");
    if (!copy) fail(ErrorKind::kIo, "cannot write " + (out_dir / "config.json").string());
    copy << cfg.source_text;
  }
  std::ofstream log(out_dir / "run.log");
  if (!log) fail(ErrorKind::kIo, "cannot write " + (out_dir / "run.log").string());
  log << "# tasks=" << schedule.num_tasks() << " classes=" << schedule.total_classes << '\n';

  std::vector<ResultRow> rows;
  for (const StrategySpec& strategy : cfg.strategies) {
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig train = cfg.train;
      train.seed = seed;
      if (strategy.ema_beta) train.ema_beta = *strategy.ema_beta;
      log << "# strategy=" << strategy.label << " seed=" << seed << '\n';
      const StreamResult result = run_stream(schedule, train, strategy.reg, TaskLogger{&log});

      const int T = schedule.num_tasks();
      if (result.accuracy.completed() != T) fail(ErrorKind::kValidation, "accuracy matrix incomplete after the run");
      ResultRow row{strategy.label, seed, average_performance(result.accuracy, T), average_forgetting(result.accuracy, T)};
      for (int t = 1; t <= T; ++t) {
        log << "# after_task=" << t << " AP=" << format_value(average_performance(result.accuracy, t))
            << " AF=" << optional_value(average_forgetting(result.accuracy, t)) << '\n';
      }
      const std::string cell = strategy.label + "_seed" + std::to_string(seed);
      emit_heatmap(result.accuracy, out_dir / ("heatmap_" + cell + ".csv"));
      save_checkpoint(out_dir / "checkpoints" / (cell + ".ckpt"), result.final_params);
      if (progress != nullptr) {
        *progress << cell << ": AP=" << format_value(row.ap_final) << " AF=" << optional_value(row.af_final) << '\n';
      }
      rows.push_back(std::move(row));
    }
  }
  write_results_csv(rows, out_dir / "results.csv");

  for (const SummaryRow& s : summarize(rows)) {
    std::ostringstream line;
    line << "# summary strategy=" << s.strategy << " runs=" << s.runs << " AP=" << format_value(s.ap_mean) << "+-"
         << optional_value(s.ap_std) << " AF=" << optional_value(s.af_mean) << "+-" << optional_value(s.af_std);
    log << line.str() << '\n';
    if (progress != nullptr) *progress << line.str().substr(2) << '\n';
  }
  return rows;
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "lambda") return SweepParam::kLambda;
  if (name == "M") return SweepParam::kQueueSize;
  if (name == "ema_beta") return SweepParam::kEmaBeta;
  if (name == "gamma") return SweepParam::kGamma;
  fail(ErrorKind::kConfig, "unknown sweep parameter '" + name + "' (expected lambda, M, ema_beta or gamma)");
}

std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::kLambda:
      return "lambda";
    case SweepParam::kQueueSize:
      return "M";
    case SweepParam::kEmaBeta:
      return "ema_beta";
    case SweepParam::kGamma:
      return "gamma";
  }
  return "unknown";
}

ExperimentConfig with_param(const ExperimentConfig& cfg, SweepParam param, double value) {
  ExperimentConfig out = cfg;
  switch (param) {
    case SweepParam::kLambda:
      for (auto& s : out.strategies) s.reg.lambda = value;
      break;
    case SweepParam::kQueueSize:
      if (value < 1 || value != std::floor(value)) fail(ErrorKind::kConfig, "M must be a positive integer");
      for (auto& s : out.strategies) s.reg.queue_capacity = static_cast<int>(value);
      break;
    case SweepParam::kEmaBeta:
      out.train.ema_beta = value;
      for (auto& s : out.strategies) s.ema_beta.reset();
      break;
    case SweepParam::kGamma:
      for (auto& s : out.strategies) s.reg.gamma = value;
      break;
  }
  out.train.validate();
  for (const auto& s : out.strategies) s.reg.validate();
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepParam param, std::vector<double> values,
                                const fs::path& out_dir, std::ostream* progress) {
  if (values.empty()) fail(ErrorKind::kConfig, "sweep needs at least one value");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  // Validate every value before any training starts.
  std::vector<ExperimentConfig> configs;
  for (double v : values) configs.push_back(with_param(cfg, param, v));

  ensure_dir(out_dir);
  const std::string name = sweep_param_name(param);
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (progress != nullptr) *progress << "# " << name << '=' << value_tag(values[k]) << '\n';
    for (ResultRow& r : run_experiment(configs[k], out_dir / (name + "_" + value_tag(values[k])), progress)) {
      rows.push_back(SweepRow{values[k], std::move(r)});
    }
  }

  std::ofstream results(out_dir / "sweep_results.csv");
  if (!results) fail(ErrorKind::kIo, "cannot write sweep results");
  results << name << ",strategy,seed,AP_final,AF_final\n";
  for (const auto& r : rows) {
    results << value_tag(r.value) << ',' << r.result.strategy << ',' << r.result.seed << ','
            << format_value(r.result.ap_final) << ',' << optional_value(r.result.af_final) << '\n';
  }

  std::ofstream summary(out_dir / "sweep_summary.csv");
  if (!summary) fail(ErrorKind::kIo, "cannot write sweep summary");
  summary << name << ",strategy,runs,AP_mean,AP_std,AF_mean,AF_std\n";
  for (double v : values) {
    std::vector<ResultRow> group;
    for (const auto& r : rows) {
      if (r.value == v) group.push_back(r.result);
    }
    for (const SummaryRow& s : summarize(group)) {
      summary << value_tag(v) << ',' << s.strategy << ',' << s.runs << ',' << format_value(s.ap_mean) << ','
              << optional_value(s.ap_std) << ',' << optional_value(s.af_mean) << ',' << optional_value(s.af_std)
              << '\n';
    }
  }
  return rows;
}

}  // namespace gclreg
