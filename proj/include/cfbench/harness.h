// Copyright 2026 The cfbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment grid runner. A run directory holds:
//
//   config.json     resolved configuration, with its fingerprint
//   results.jsonl   one CounterfactualResult per line, appended as produced
//   timings.jsonl   wall time per result (kept apart so results stay stable)
//   report.json     one MetricsReport per (dataset, method) cell
//   table.md        comparison table
//   plot.svg        metric panels with CI whiskers
//   run.log         human-readable log
//
// Re-running into the same directory resumes: examples already present in
// results.jsonl are skipped and a torn final line is discarded.

#ifndef CFBENCH_HARNESS_H_
#define CFBENCH_HARNESS_H_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfbench/chat.h"
#include "cfbench/gateway.h"
#include "cfbench/llm_methods.h"
#include "cfbench/metrics.h"
#include "cfbench/search.h"

namespace cfbench {

struct BackendConfig {
  std::string kind = "stub";  // "stub" or "server"
  std::filesystem::path stub_lexicon;
  uint64_t stub_seed = 0;
  // Per-dataset model server command lines (kind == "server").
  std::map<Dataset, std::vector<std::string>> server_command;
};

struct ExperimentConfig {
  std::vector<Dataset> datasets = {Dataset::kSst2, Dataset::kQnli};
  std::vector<Method> methods = AllMethods();
  size_t n_samples = 1000;
  uint64_t seed = 0;
  SearchConfig search;
  std::filesystem::path data_dir = "data";
  std::string split = "validation";
  BackendConfig backend;
  std::filesystem::path prompts_file;
  ChatSettings chat;
  std::filesystem::path output_dir = "runs/default";
  int n_boot = 1000;
  double alpha = 0.05;
  MetricPopulation population = MetricPopulation::kAllWithText;
  int workers = 0;  // 0: OpenMP default

  // Relative paths resolve against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  static ExperimentConfig FromFile(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  // Hash of everything that can change results; output_dir, workers and the
  // replay-only switch are excluded.
  std::string Fingerprint() const;
};

// Builds the model gateway for one dataset, chat client included.
using GatewayFactory = std::function<std::shared_ptr<const ModelGateway>(Dataset)>;
GatewayFactory MakeGatewayFactory(const ExperimentConfig& config);

// Runs one method on one example.
CounterfactualResult GenerateCounterfactual(Method method, const ExampleRecord& example,
                                            const ExperimentConfig& config,
                                            const PromptSet* prompts,
                                            const ModelGateway& gateway);

// Reason `method` cannot run on `gateway`, or nullopt if it can.
std::optional<std::string> MethodInapplicable(Method method, const ModelGateway& gateway,
                                              const PromptSet* prompts);

struct RunArtifact {
  std::filesystem::path dir;
  std::filesystem::path results;
  std::filesystem::path timings;
  std::filesystem::path report;
  std::filesystem::path table;
  std::filesystem::path plot;
  std::filesystem::path log;
  std::string fingerprint;
  std::vector<MetricsReport> reports;

  static RunArtifact In(const std::filesystem::path& dir);
};

struct RunOptions {
  // Stop after appending this many new results, simulating an interruption.
  std::optional<size_t> stop_after;
};

RunArtifact RunExperiment(const ExperimentConfig& config, const GatewayFactory& factory,
                          const RunOptions& options = {});
RunArtifact RunExperiment(const ExperimentConfig& config);

// Rebuilds report.json, table.md and plot.svg from config.json and
// results.jsonl in `dir`.
RunArtifact RegenerateReport(const std::filesystem::path& dir);

// Complete lines of a results file; a torn final line is ignored.
std::vector<CounterfactualResult> ReadResults(const std::filesystem::path& path);

// One report per non-empty (dataset, method) cell, in configured order.
std::vector<MetricsReport> BuildReports(const std::vector<CounterfactualResult>& results,
                                        const ExperimentConfig& config,
                                        const std::string& fingerprint);

}  // namespace cfbench

#endif  // CFBENCH_HARNESS_H_
