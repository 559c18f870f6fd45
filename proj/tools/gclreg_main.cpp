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

// Command-line front end. Talks to the library only through the C API.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gclreg/gclreg.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

int exit_code(gclreg_status s) {
  switch (s) {
    case GCLREG_OK:
      return kExitOk;
    case GCLREG_CONFIG:
    case GCLREG_PARSE:
    case GCLREG_VALIDATION:
    case GCLREG_INVALID_ARGUMENT:
      return kExitInvalid;
    default:
      return kExitRuntime;
  }
}

int report(gclreg_status s) {
  if (s != GCLREG_OK) std::cerr << "gclreg: " << gclreg_status_name(s) << ": " << gclreg_last_error() << '\n';
  return exit_code(s);
}

void print_line(const char* line, void*) { std::cout << line << std::endl; }

using ExperimentPtr = std::unique_ptr<gclreg_experiment, decltype(&gclreg_experiment_free)>;

int open_experiment(const std::string& path, const std::string& out_dir, bool quiet, ExperimentPtr& exp) {
  gclreg_experiment* raw = nullptr;
  const gclreg_status s = gclreg_experiment_load(path.c_str(), &raw);
  if (s != GCLREG_OK) return report(s);
  exp.reset(raw);
  if (!out_dir.empty()) {
    if (const gclreg_status o = gclreg_experiment_set_output_dir(raw, out_dir.c_str()); o != GCLREG_OK) return report(o);
  }
  if (!quiet) gclreg_experiment_set_progress(raw, print_line, nullptr);
  return kExitOk;
}

bool parse_values(const std::string& text, std::vector<double>& out, std::string& bad) {
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    item = item.substr(first, item.find_last_not_of(" \t") - first + 1);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(item.c_str(), &end);
    if (errno != 0 || end == item.c_str() || *end != '\0') {
      bad = item;
      return false;
    }
    out.push_back(v);
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual graph learning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gclreg_version()));

  std::string out_dir;
  bool quiet = false;
  app.add_option("-o,--output", out_dir, "Output directory (overrides config and GCLREG_OUTPUT_ROOT)");
  app.add_flag("-q,--quiet", quiet, "Suppress progress lines");

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "Run every strategy x seed cell of a config");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->fallthrough();

  std::string sweep_config;
  std::string param = "lambda";
  std::string values_text = "0.01,0.1,0.5";
  CLI::App* sweep = app.add_subcommand("sweep", "Repeat a run for each value of one parameter");
  sweep->add_option("config", sweep_config, "Experiment config (JSON)")->required();
  sweep->add_option("--param", param, "lambda, M, ema_beta or gamma")->capture_default_str();
  sweep->add_option("--values", values_text, "Comma-separated values")->capture_default_str();
  sweep->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  ExperimentPtr exp(nullptr, &gclreg_experiment_free);
  if (run->parsed()) {
    if (const int rc = open_experiment(run_config, out_dir, quiet, exp); rc != kExitOk) return rc;
    const gclreg_status s = gclreg_experiment_run(exp.get());
    if (s == GCLREG_OK && !quiet) std::cout << "results in " << gclreg_experiment_output_dir(exp.get()) << '\n';
    return report(s);
  }

  std::vector<double> values;
  std::string bad;
  if (!parse_values(values_text, values, bad)) {
    std::cerr << "gclreg: --values: not a number: '" << bad << "'\n";
    return kExitInvalid;
  }
  if (const int rc = open_experiment(sweep_config, out_dir, quiet, exp); rc != kExitOk) return rc;
  const gclreg_status s = gclreg_experiment_sweep(exp.get(), param.c_str(), values.data(), values.size());
  if (s == GCLREG_OK && !quiet) std::cout << "results in " << gclreg_experiment_output_dir(exp.get()) << '\n';
  return report(s);
}
