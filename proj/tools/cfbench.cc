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

// cfbench run | report | single

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfbench/error.h"
#include "cfbench/harness.h"
#include "cfbench/text.h"
#include "spdlog/spdlog.h"

namespace fs = std::filesystem;
using namespace cfbench;

namespace {

constexpr int kUsageError = 2;

fs::path DefaultConfig() {
  if (fs::exists("config/stub.json")) return "config/stub.json";
  return fs::path(CFBENCH_SOURCE_DIR) / "config" / "stub.json";
}

std::string Join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

CLI::Validator MemberOf(std::vector<std::string> names) {
  return CLI::Validator(
      [names](std::string& v) -> std::string {
        if (std::find(names.begin(), names.end(), v) != names.end()) return {};
        return "'" + v + "' is not one of: " + Join(names);
      },
      "{" + Join(names) + "}");
}

std::vector<std::string> MethodNames() {
  std::vector<std::string> out;
  for (Method m : AllMethods()) out.emplace_back(MethodName(m));
  return out;
}

struct Common {
  std::string config;
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::optional<size_t> n_samples;
  std::optional<uint64_t> seed;
  std::string output_dir;
  bool mock_llm = false;
  std::optional<int> workers;
};

ExperimentConfig LoadConfig(const Common& c) {
  auto config = ExperimentConfig::FromFile(c.config.empty() ? DefaultConfig() : fs::path(c.config));
  if (!c.datasets.empty()) {
    config.datasets.clear();
    for (const auto& d : c.datasets) config.datasets.push_back(ParseDataset(d));
  }
  if (!c.methods.empty()) {
    config.methods.clear();
    for (const auto& m : c.methods) config.methods.push_back(ParseMethod(m));
  }
  if (c.n_samples) config.n_samples = *c.n_samples;
  if (c.seed) config.seed = *c.seed;
  if (!c.output_dir.empty()) config.output_dir = fs::absolute(c.output_dir);
  if (c.mock_llm) config.chat.replay_only = true;
  if (c.workers) config.workers = *c.workers;
  return config;
}

int Run(const Common& c) {
  const auto config = LoadConfig(c);
  const auto a = RunExperiment(config);
  std::cout << "run " << a.fingerprint << " written to " << a.dir.string() << "\n\n";
  if (fs::exists(a.table)) {
    std::ifstream in(a.table);
    std::cout << in.rdbuf();
  }
  return 0;
}

int Report(const std::string& dir) {
  const auto a = RegenerateReport(dir);
  std::ifstream in(a.table);
  std::cout << in.rdbuf();
  return 0;
}

int Single(const Common& c, const std::string& text) {
  auto config = LoadConfig(c);
  const Dataset dataset = config.datasets.front();
  const Method method = config.methods.front();
  ExampleRecord ex;
  ex.id = "single";
  ex.dataset = dataset;
  if (dataset == Dataset::kQnli) {
    auto [q, s] = SplitPair(Preprocess(text));
    ex.question = q;
    ex.sentence = s;
  } else {
    ex.text = Preprocess(text);
  }
  if (ex.ClassifierText().empty()) throw InvalidInput("empty --text");
  const auto gateway = MakeGatewayFactory(config)(dataset);
  std::unique_ptr<PromptSet> prompts;
  if (!config.prompts_file.empty()) {
    prompts = std::make_unique<PromptSet>(PromptSet::FromFile(config.prompts_file));
  }
  if (auto why = MethodInapplicable(method, *gateway, prompts.get())) {
    throw CapabilityError(std::string(MethodName(method)) + " cannot run: " + *why);
  }
  const auto r = GenerateCounterfactual(method, ex, config, prompts.get(), *gateway);
  std::cerr << "original label " << r.original_label;
  if (r.counterfactual_label) std::cerr << ", counterfactual label " << *r.counterfactual_label;
  if (r.edits_made) std::cerr << ", " << *r.edits_made << " edit(s)";
  std::cerr << '\n';
  if (!r.counterfactual_text) {
    std::cerr << "no counterfactual: " << r.failure_reason.value_or("unknown") << '\n';
    return 1;
  }
  if (!r.flipped) std::cerr << "warning: label did not flip (" << *r.failure_reason << ")\n";
  std::cout << *r.counterfactual_text << '\n';
  return 0;
}

void AddCommon(CLI::App* cmd, Common& c, bool single) {
  cmd->add_option("--config", c.config, "JSON experiment config (default: config/stub.json)");
  auto* d = cmd->add_option("--dataset", c.datasets, "sst2 or qnli")
                ->check(MemberOf({"sst2", "qnli"}));
  auto* m = cmd->add_option("--method", c.methods, Join(MethodNames()))->check(MemberOf(MethodNames()));
  if (single) {
    d->expected(1);
    m->expected(1)->required();
  } else {
    d->delimiter(',');
    m->delimiter(',');
  }
  cmd->add_option("--seed", c.seed, "sampling seed");
  cmd->add_flag("--mock-llm", c.mock_llm, "replay LLM responses from cache only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanation benchmark"};
  app.require_subcommand(1);
  Common common;
  std::string report_dir;
  std::string text;

  auto* run = app.add_subcommand("run", "run the dataset x method grid");
  AddCommon(run, common, false);
  run->add_option("--n-samples", common.n_samples, "examples per dataset")
      ->check(CLI::PositiveNumber);
  run->add_option("--output-dir", common.output_dir, "run directory");
  run->add_option("--workers", common.workers, "parallel examples (default: all cores)");

  auto* report = app.add_subcommand("report", "rebuild reports from a run directory");
  report->add_option("--output-dir,dir", report_dir, "run directory")->required();

  auto* single = app.add_subcommand("single", "explain one input with one method");
  AddCommon(single, common, true);
  single->add_option("--text", text, "input text; QNLI pairs as 'question [SEP] sentence'")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsageError;
  }

  try {
    if (*run) return Run(common);
    if (*report) return Report(report_dir);
    if (*single) return Single(common, text);
  } catch (const Error& e) {
    std::cerr << "cfbench: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cfbench: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}
