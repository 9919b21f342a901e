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

// Experiment configs over the bundled sample data with the stub backend and
// a scripted chat model, so every method runs offline.

#ifndef CFBENCH_TESTS_STUB_FIXTURE_H_
#define CFBENCH_TESTS_STUB_FIXTURE_H_

#include <filesystem>
#include <memory>
#include <string>

#include "cfbench/dataset.h"
#include "cfbench/harness.h"
#include "cfbench/stub_backend.h"

namespace cfbench::testing {

inline std::filesystem::path SourceDir() { return CFBENCH_SOURCE_DIR; }

inline ExperimentConfig StubConfig(const std::filesystem::path& output_dir, size_t n_samples) {
  ExperimentConfig c;
  c.n_samples = n_samples;
  c.data_dir = SourceDir() / "data" / "sample";
  c.backend.kind = "stub";
  c.backend.stub_lexicon = SourceDir() / "config" / "stub_lexicon.json";
  c.prompts_file = SourceDir() / "config" / "prompts.json";
  c.chat.model_id = "scripted-chat";
  // Shared by sibling run directories, so later runs start warm.
  c.chat.cache_file = output_dir.parent_path() / "chat-cache.jsonl";
  c.output_dir = output_dir;
  c.n_boot = 200;
  c.search.w = 3;
  c.search.b = 5;
  c.search.k = 10;
  return c;
}

// Stage one names the first word; edits insert "not" after the first word.
inline std::string ScriptedReply(const ChatRequest& req) {
  const std::string& text = req.user_prompt;
  const size_t space = text.find(' ');
  if (req.system_prompt.find("List the input words") != std::string::npos) {
    return "[\"" + text.substr(0, space) + "\"]";
  }
  if (space == std::string::npos) return text + " not";
  return text.substr(0, space) + " not" + text.substr(space);
}

// Stub models plus a cache-fronted scripted chat; `mock_out` receives the
// upstream mock so callers can count calls.
inline GatewayFactory ScriptedFactory(const ExperimentConfig& config,
                                      std::shared_ptr<MockChatClient>* mock_out = nullptr) {
  auto mock = std::make_shared<MockChatClient>(ScriptedReply);
  if (mock_out) *mock_out = mock;
  auto chat = std::make_shared<CachedChatClient>(
      std::make_shared<ResponseCache>(config.chat.cache_file), mock);
  return [config, chat](Dataset d) -> std::shared_ptr<const ModelGateway> {
    std::vector<std::string> corpus;
    for (const auto& r : LoadAllRecords(d, {config.data_dir, config.split})) {
      corpus.push_back(r.ClassifierText());
    }
    auto parts = MakeStubParts(corpus, StubLexicon::FromFile(config.backend.stub_lexicon, d),
                               config.backend.stub_seed);
    parts.chat = chat;
    parts.chat_model_id = config.chat.model_id;
    return std::make_shared<const ModelGateway>(std::move(parts));
  };
}

}  // namespace cfbench::testing

#endif  // CFBENCH_TESTS_STUB_FIXTURE_H_
