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

#include "cfbench/harness.h"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "cfbench/closs.h"
#include "cfbench/dataset.h"
#include "cfbench/digest.h"
#include "cfbench/error.h"
#include "cfbench/plot.h"
#include "cfbench/process_backend.h"
#include "cfbench/stub_backend.h"
#include "spdlog/sinks/basic_file_sink.h"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace cfbench {
namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigDirVar = "${CONFIG_DIR}";

fs::path Resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return fs::weakly_canonical(base / p);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

bool NeedsChat(Method m) { return m == Method::kFizleNaive || m == Method::kFizleGuided; }

using CellKey = std::pair<Dataset, Method>;

struct SkipMarker {
  Dataset dataset;
  Method method;
  std::string reason;
};

std::vector<SkipMarker> ReadSkips(const fs::path& path) {
  std::vector<SkipMarker> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    out.push_back({ParseDataset(j.at("dataset").get<std::string>()),
                   ParseMethod(j.at("method").get<std::string>()),
                   j.at("reason").get<std::string>()});
  }
  return out;
}

// Drops a torn final line so appends start on a line boundary.
void RepairTail(const fs::path& path) {
  if (!fs::exists(path)) return;
  const std::string content = ReadFile(path);
  if (content.empty() || content.back() == '\n') return;
  const size_t keep = content.rfind('\n');
  fs::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
  spdlog::warn("discarded a partial record at the end of {}", path.string());
}

std::shared_ptr<spdlog::logger> MakeRunLogger(const fs::path& log_path) {
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(log_path.string());
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  console->set_level(spdlog::level::warn);
  auto logger =
      std::make_shared<spdlog::logger>("cfbench-run", spdlog::sinks_init_list{file, console});
  logger->set_level(spdlog::level::info);
  logger->flush_on(spdlog::level::info);
  return logger;
}

// Installs `logger` as the default for the lifetime of this object.
class ScopedDefaultLogger {
 public:
  explicit ScopedDefaultLogger(std::shared_ptr<spdlog::logger> logger)
      : previous_(spdlog::default_logger()) {
    spdlog::set_default_logger(std::move(logger));
  }
  ~ScopedDefaultLogger() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

CounterfactualResult ErrorResult(Method method, const ExampleRecord& example,
                                 const ModelGateway& gateway, const std::exception& e) {
  CounterfactualResult r;
  r.example_id = example.id;
  r.dataset = example.dataset;
  r.method = method;
  r.original_text = example.ClassifierText();
  try {
    r.original_label = gateway.Classify(r.original_text).label;
  } catch (const std::exception&) {
    r.original_label = example.gold_label;
  }
  SetFailure(r, "error");
  r.metadata["error"] = e.what();
  return r;
}

void WriteReports(const RunArtifact& a, const std::vector<MetricsReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(r);
  WriteFile(a.report, j.dump(2) + "\n");
  if (reports.empty()) {
    WriteFile(a.table, "No results.\n");
    return;
  }
  WriteFile(a.table, RenderTable(reports));
  EmitPlot(reports, a.plot);
}

}  // namespace

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    if (j.contains("datasets")) {
      c.datasets.clear();
      for (const auto& d : j["datasets"]) c.datasets.push_back(ParseDataset(d.get<std::string>()));
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(ParseMethod(m.get<std::string>()));
    }
    c.n_samples = j.value("n_samples", c.n_samples);
    c.seed = j.value("seed", c.seed);
    if (j.contains("search")) c.search = j["search"].get<SearchConfig>();
    c.data_dir = Resolve(j.value("data_dir", c.data_dir.string()), base_dir);
    c.split = j.value("split", c.split);
    if (j.contains("backend")) {
      const auto& b = j["backend"];
      c.backend.kind = b.value("kind", c.backend.kind);
      if (c.backend.kind != "stub" && c.backend.kind != "server") {
        throw ConfigurationError("backend.kind must be 'stub' or 'server'");
      }
      c.backend.stub_lexicon = Resolve(b.value("stub_lexicon", std::string()), base_dir);
      c.backend.stub_seed = b.value("stub_seed", c.backend.stub_seed);
      if (b.contains("server_command")) {
        for (const auto& [name, argv] : b["server_command"].items()) {
          auto args = argv.get<std::vector<std::string>>();
          for (auto& a : args) {
            if (auto pos = a.find(kConfigDirVar); pos != std::string::npos) {
              a.replace(pos, std::string(kConfigDirVar).size(),
                        fs::absolute(base_dir).lexically_normal().string());
            }
          }
          c.backend.server_command[ParseDataset(name)] = std::move(args);
        }
      }
    }
    c.prompts_file = Resolve(j.value("prompts_file", std::string()), base_dir);
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      c.chat.model_id = l.value("model", c.chat.model_id);
      c.chat.base_url = l.value("base_url", c.chat.base_url);
      c.chat.api_key_env = l.value("api_key_env", c.chat.api_key_env);
      c.chat.cache_file = Resolve(l.value("cache_file", std::string()), base_dir);
      c.chat.max_in_flight = l.value("max_in_flight", c.chat.max_in_flight);
      c.chat.decoding.temperature = l.value("temperature", c.chat.decoding.temperature);
      c.chat.decoding.max_tokens = l.value("max_tokens", c.chat.decoding.max_tokens);
      c.chat.replay_only = l.value("replay_only", c.chat.replay_only);
    }
    c.output_dir = Resolve(j.value("output_dir", c.output_dir.string()), base_dir);
    c.n_boot = j.value("n_boot", c.n_boot);
    c.alpha = j.value("alpha", c.alpha);
    c.population = ParsePopulation(j.value("population", std::string("all")));
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfiguration) throw;
    throw ConfigurationError(std::string("bad config: ") + e.what());
  }
  if (c.datasets.empty() || c.methods.empty()) {
    throw ConfigurationError("config selects no datasets or no methods");
  }
  if (c.n_samples == 0) throw ConfigurationError("n_samples must be positive");
  if (c.n_boot < 1) throw ConfigurationError("n_boot must be positive");
  return c;
}

ExperimentConfig ExperimentConfig::FromFile(const fs::path& path) {
  const std::string text = ReadFile(path);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigurationError("config is not valid JSON: " + path.string());
  return FromJson(j, fs::absolute(path).parent_path());
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  for (Dataset d : datasets) j["datasets"].push_back(DatasetName(d));
  for (Method m : methods) j["methods"].push_back(MethodName(m));
  j["n_samples"] = n_samples;
  j["seed"] = seed;
  j["search"] = search;
  j["data_dir"] = data_dir.string();
  j["split"] = split;
  nlohmann::json b;
  b["kind"] = backend.kind;
  b["stub_lexicon"] = backend.stub_lexicon.string();
  b["stub_seed"] = backend.stub_seed;
  b["server_command"] = nlohmann::json::object();
  for (const auto& [d, argv] : backend.server_command) b["server_command"][DatasetName(d)] = argv;
  j["backend"] = b;
  j["prompts_file"] = prompts_file.string();
  j["llm"] = {{"model", chat.model_id},
              {"base_url", chat.base_url},
              {"api_key_env", chat.api_key_env},
              {"cache_file", chat.cache_file.string()},
              {"max_in_flight", chat.max_in_flight},
              {"temperature", chat.decoding.temperature},
              {"max_tokens", chat.decoding.max_tokens},
              {"replay_only", chat.replay_only}};
  j["output_dir"] = output_dir.string();
  j["n_boot"] = n_boot;
  j["alpha"] = alpha;
  j["population"] = PopulationName(population);
  j["workers"] = workers;
  return j;
}

std::string ExperimentConfig::Fingerprint() const {
  auto j = ToJson();
  j.erase("output_dir");
  j.erase("workers");
  j["llm"].erase("replay_only");
  j["llm"].erase("max_in_flight");
  // Prompt wording changes results, so the template file content counts.
  if (!prompts_file.empty() && fs::exists(prompts_file)) {
    j["prompts_sha256"] = Sha256Hex(ReadFile(prompts_file));
  }
  if (!backend.stub_lexicon.empty() && fs::exists(backend.stub_lexicon)) {
    j["backend"]["stub_lexicon_sha256"] = Sha256Hex(ReadFile(backend.stub_lexicon));
  }
  return Sha256Hex(j.dump()).substr(0, 16);
}

GatewayFactory MakeGatewayFactory(const ExperimentConfig& config) {
  const bool wants_chat = std::any_of(config.methods.begin(), config.methods.end(), NeedsChat);
  std::shared_ptr<ChatClient> chat;
  if (wants_chat) chat = MakeChatClient(config.chat);
  return [config, chat](Dataset d) -> std::shared_ptr<const ModelGateway> {
    GatewayParts parts;
    if (config.backend.kind == "stub") {
      if (config.backend.stub_lexicon.empty()) {
        throw ConfigurationError("stub backend needs backend.stub_lexicon");
      }
      std::vector<std::string> corpus;
      for (const auto& r : LoadAllRecords(d, {config.data_dir, config.split})) {
        corpus.push_back(r.ClassifierText());
      }
      parts = MakeStubParts(corpus, StubLexicon::FromFile(config.backend.stub_lexicon, d),
                            config.backend.stub_seed);
    } else {
      auto it = config.backend.server_command.find(d);
      if (it == config.backend.server_command.end()) {
        throw ConfigurationError("no model server command for " + std::string(DatasetName(d)));
      }
      auto server = std::make_shared<ModelServer>(it->second);
      auto classifier = std::make_shared<ServerClassifier>(server);
      parts.tokenizer = std::make_shared<WordPieceTokenizer>(
          Vocabulary::FromFile(classifier->vocab_file()));
      parts.classifier = classifier;
      const auto& info = server->info();
      auto hosts = [&](const char* role) { return info.contains(role) && !info[role].is_null(); };
      if (hosts("mlm")) parts.mlm = std::make_shared<ServerMaskedLm>(server);
      if (hosts("lm")) parts.scorer = std::make_shared<ServerCausalLm>(server);
      if (hosts("generator")) parts.generator = std::make_shared<ServerGenerator>(server);
    }
    parts.chat = chat;
    parts.chat_model_id = config.chat.model_id;
    parts.decoding = config.chat.decoding;
    return std::make_shared<const ModelGateway>(std::move(parts));
  };
}

std::optional<std::string> MethodInapplicable(Method method, const ModelGateway& gateway,
                                              const PromptSet* prompts) {
  switch (method) {
    case Method::kHotFlip:
      if (!gateway.HasGradients()) return "classifier exposes no gradients";
      break;
    case Method::kCloss:
      if (!gateway.HasGradients()) return "classifier exposes no gradients";
      if (!gateway.HasMlm()) return "no masked language model";
      break;
    case Method::kPolyjuice:
      if (!gateway.HasGenerator()) return "no controlled generator";
      break;
    case Method::kFizleNaive:
    case Method::kFizleGuided:
      if (!prompts) return "no prompt templates configured";
      if (!gateway.HasChat()) return "no chat client";
      break;
  }
  return std::nullopt;
}

CounterfactualResult GenerateCounterfactual(Method method, const ExampleRecord& example,
                                            const ExperimentConfig& config,
                                            const PromptSet* prompts,
                                            const ModelGateway& gateway) {
  switch (method) {
    case Method::kHotFlip:
      return HotFlipGenerate(example, config.search, gateway);
    case Method::kCloss:
      return ClossGenerate(example, config.search, gateway);
    case Method::kPolyjuice:
      return ControlledGenerate(example, ControlCode::Default(example.dataset), gateway);
    case Method::kFizleNaive:
    case Method::kFizleGuided:
      if (!prompts) throw CapabilityError("no prompt templates configured");
      return method == Method::kFizleNaive ? FizleNaiveGenerate(example, *prompts, gateway)
                                           : FizleGuidedGenerate(example, *prompts, gateway);
  }
  throw InvalidInput("unknown method");
}

RunArtifact RunArtifact::In(const fs::path& dir) {
  RunArtifact a;
  a.dir = dir;
  a.results = dir / "results.jsonl";
  a.timings = dir / "timings.jsonl";
  a.report = dir / "report.json";
  a.table = dir / "table.md";
  a.plot = dir / "plot.svg";
  a.log = dir / "run.log";
  return a;
}

std::vector<CounterfactualResult> ReadResults(const fs::path& path) {
  std::vector<CounterfactualResult> out;
  if (!fs::exists(path)) return out;
  const std::string content = ReadFile(path);
  size_t start = 0;
  while (start < content.size()) {
    const size_t end = content.find('\n', start);
    if (end == std::string::npos) break;  // torn tail
    const std::string_view line(content.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::kIo, "corrupt record in " + path.string());
    out.push_back(j.get<CounterfactualResult>());
  }
  return out;
}

std::vector<MetricsReport> BuildReports(const std::vector<CounterfactualResult>& results,
                                        const ExperimentConfig& config,
                                        const std::string& fingerprint) {
  ReportOptions options;
  options.n_boot = config.n_boot;
  options.alpha = config.alpha;
  options.seed = config.seed;
  options.population = config.population;
  std::vector<MetricsReport> reports;
  for (Dataset d : config.datasets) {
    for (Method m : config.methods) {
      std::vector<CounterfactualResult> cell;
      for (const auto& r : results) {
        if (r.dataset == d && r.method == m) cell.push_back(r);
      }
      if (cell.empty()) continue;
      std::map<std::string, double> ppl;
      bool complete = true;
      for (const auto& r : cell) {
        if (!r.counterfactual_text) continue;
        if (r.perplexity) {
          ppl[*r.counterfactual_text] = *r.perplexity;
        } else {
          complete = false;
        }
      }
      PerplexityFn scorer;
      if (complete) scorer = [&ppl](const std::string& t) { return ppl.at(t); };
      std::string scorer_id = "none";
      if (auto it = cell.front().metadata.find("scorer_model_id");
          it != cell.front().metadata.end()) {
        scorer_id = it->second;
      }
      auto report = BuildReport(cell, scorer, scorer_id, options);
      report.config_fingerprint = fingerprint;
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

namespace {

std::vector<MetricsReport> ReportsWithSkips(const std::vector<CounterfactualResult>& results,
                                            const std::vector<SkipMarker>& skips,
                                            const ExperimentConfig& config,
                                            const std::string& fingerprint) {
  auto reports = BuildReports(results, config, fingerprint);
  for (const auto& s : skips) {
    const bool has = std::any_of(reports.begin(), reports.end(), [&](const MetricsReport& r) {
      return r.dataset == s.dataset && r.method == s.method;
    });
    if (has) continue;
    MetricsReport r;
    r.dataset = s.dataset;
    r.method = s.method;
    r.n = 0;
    r.lfs = 0.0;
    r.lfs_ci = {0.0, 0.0};
    r.scorer_model_id = "none";
    r.config_fingerprint = fingerprint;
    r.skipped_reason = s.reason;
    reports.push_back(std::move(r));
  }
  // Grid order: datasets, then methods, as configured.
  auto rank = [&](const MetricsReport& r) {
    const auto di = std::find(config.datasets.begin(), config.datasets.end(), r.dataset) -
                    config.datasets.begin();
    const auto mi = std::find(config.methods.begin(), config.methods.end(), r.method) -
                    config.methods.begin();
    return std::pair{di, mi};
  };
  std::stable_sort(reports.begin(), reports.end(),
                   [&](const MetricsReport& a, const MetricsReport& b) { return rank(a) < rank(b); });
  return reports;
}

}  // namespace

RunArtifact RunExperiment(const ExperimentConfig& config, const GatewayFactory& factory,
                          const RunOptions& options) {
  RunArtifact a = RunArtifact::In(config.output_dir);
  fs::create_directories(a.dir);
  a.fingerprint = config.Fingerprint();

  const fs::path config_path = a.dir / "config.json";
  if (fs::exists(config_path)) {
    const auto previous = nlohmann::json::parse(ReadFile(config_path), nullptr, false);
    if (previous.is_discarded() || previous.value("config_fingerprint", "") != a.fingerprint) {
      throw ConfigurationError("output directory " + a.dir.string() +
                               " holds a run with a different configuration");
    }
  }
  auto snapshot = config.ToJson();
  snapshot["config_fingerprint"] = a.fingerprint;
  WriteFile(config_path, snapshot.dump(2) + "\n");

  ScopedDefaultLogger scoped(MakeRunLogger(a.log));
  spdlog::info("run {} starting in {}", a.fingerprint, a.dir.string());

  RepairTail(a.results);
  RepairTail(a.timings);
  std::set<std::tuple<Dataset, Method, std::string>> done;
  for (const auto& r : ReadResults(a.results)) done.emplace(r.dataset, r.method, r.example_id);
  if (!done.empty()) spdlog::info("resuming: {} results already present", done.size());
  const fs::path skip_path = a.dir / "skipped.jsonl";
  auto skips = ReadSkips(skip_path);

  std::unique_ptr<PromptSet> prompts;
  if (!config.prompts_file.empty() &&
      std::any_of(config.methods.begin(), config.methods.end(), NeedsChat)) {
    prompts = std::make_unique<PromptSet>(PromptSet::FromFile(config.prompts_file));
  }

  std::ofstream results_out(a.results, std::ios::app | std::ios::binary);
  std::ofstream timings_out(a.timings, std::ios::app | std::ios::binary);
  if (!results_out || !timings_out) throw IoError("cannot append to " + a.dir.string());
  const int workers = config.workers > 0 ? config.workers : omp_get_max_threads();
  size_t appended = 0;

  for (Dataset d : config.datasets) {
    const auto records =
        LoadDataset(d, config.n_samples, config.seed, {config.data_dir, config.split});
    const auto gateway = factory(d);
    for (Method m : config.methods) {
      const auto key = CellKey{d, m};
      const bool skipped = std::any_of(skips.begin(), skips.end(), [&](const SkipMarker& s) {
        return CellKey{s.dataset, s.method} == key;
      });
      if (skipped) continue;
      if (auto why = MethodInapplicable(m, *gateway, prompts.get())) {
        spdlog::warn("{} on {} skipped: {}", MethodName(m), DatasetName(d), *why);
        skips.push_back({d, m, *why});
        std::ofstream s(skip_path, std::ios::app);
        s << nlohmann::json{{"dataset", DatasetName(d)}, {"method", MethodName(m)},
                            {"reason", *why}}.dump()
          << '\n';
        continue;
      }
      std::vector<const ExampleRecord*> pending;
      for (const auto& r : records) {
        if (!done.count({d, m, r.id})) pending.push_back(&r);
      }
      spdlog::info("{} on {}: {} examples pending", MethodName(m), DatasetName(d),
                   pending.size());
      const size_t chunk = static_cast<size_t>(workers) * 2;
      for (size_t begin = 0; begin < pending.size(); begin += chunk) {
        const size_t end = std::min(pending.size(), begin + chunk);
        std::vector<CounterfactualResult> batch(end - begin);
        const long n = static_cast<long>(batch.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (long i = 0; i < n; ++i) {
          const ExampleRecord& ex = *pending[begin + i];
          try {
            batch[i] = GenerateCounterfactual(m, ex, config, prompts.get(), *gateway);
          } catch (const std::exception& e) {
            batch[i] = ErrorResult(m, ex, *gateway, e);
          }
          auto& r = batch[i];
          r.metadata["config_fingerprint"] = a.fingerprint;
          r.metadata["classifier_model_id"] = gateway->ClassifierModelId();
          if (r.counterfactual_text && gateway->HasScorer()) {
            try {
              r.perplexity = gateway->SequencePerplexity(*r.counterfactual_text);
              r.metadata["scorer_model_id"] = gateway->ScorerModelId();
            } catch (const std::exception& e) {
              r.metadata["perplexity_error"] = e.what();
            }
          }
        }
        for (const auto& r : batch) {
          results_out << nlohmann::json(r).dump() << '\n';
          results_out.flush();
          timings_out << nlohmann::json{{"dataset", DatasetName(r.dataset)},
                                        {"method", MethodName(r.method)},
                                        {"example_id", r.example_id},
                                        {"wall_time", r.wall_time}}
                             .dump()
                      << '\n';
          timings_out.flush();
          if (!results_out || !timings_out) throw IoError("failed appending results");
          if (r.failure_reason) {
            spdlog::info("{} {} {}: {}", DatasetName(d), MethodName(m), r.example_id,
                         *r.failure_reason);
          }
          if (options.stop_after && ++appended >= *options.stop_after) {
            spdlog::info("stopping early after {} new results", appended);
            return a;
          }
        }
      }
    }
  }
  results_out.close();
  timings_out.close();

  a.reports = ReportsWithSkips(ReadResults(a.results), skips, config, a.fingerprint);
  WriteReports(a, a.reports);
  spdlog::info("run {} finished: {} reports", a.fingerprint, a.reports.size());
  return a;
}

RunArtifact RunExperiment(const ExperimentConfig& config) {
  return RunExperiment(config, MakeGatewayFactory(config));
}

RunArtifact RegenerateReport(const fs::path& dir) {
  RunArtifact a = RunArtifact::In(dir);
  const fs::path config_path = dir / "config.json";
  if (!fs::exists(config_path)) throw IoError("no config.json in " + dir.string());
  const auto snapshot = nlohmann::json::parse(ReadFile(config_path));
  const auto config = ExperimentConfig::FromJson(snapshot);
  a.fingerprint = snapshot.at("config_fingerprint").get<std::string>();
  a.reports = ReportsWithSkips(ReadResults(a.results), ReadSkips(dir / "skipped.jsonl"), config,
                               a.fingerprint);
  WriteReports(a, a.reports);
  return a;
}

}  // namespace cfbench
