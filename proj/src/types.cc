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

#include "cfbench/types.h"

#include <algorithm>
#include <cmath>

#include "cfbench/error.h"
#include "cfbench/text.h"

namespace cfbench {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kGatewayUnavailable: return "gateway unavailable";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kUpstreamUnavailable: return "upstream unavailable";
    case ErrorKind::kIngestion: return "ingestion";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kMalformedOutput: return "malformed output";
  }
  return "unknown";
}

std::string_view DatasetName(Dataset d) {
  return d == Dataset::kSst2 ? "sst2" : "qnli";
}

Dataset ParseDataset(std::string_view name) {
  if (name == "sst2") return Dataset::kSst2;
  if (name == "qnli") return Dataset::kQnli;
  throw InvalidInput("unknown dataset '" + std::string(name) + "'");
}

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kHotFlip: return "hotflip";
    case Method::kCloss: return "closs";
    case Method::kPolyjuice: return "polyjuice";
    case Method::kFizleNaive: return "fizle-naive";
    case Method::kFizleGuided: return "fizle-guided";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (Method m : AllMethods()) {
    if (MethodName(m) == name) return m;
  }
  throw InvalidInput("unknown method '" + std::string(name) + "'");
}

const std::vector<Method>& AllMethods() {
  static const std::vector<Method> kAll = {Method::kHotFlip, Method::kCloss,
                                           Method::kPolyjuice, Method::kFizleNaive,
                                           Method::kFizleGuided};
  return kAll;
}

ClassifierOutput ClassifierOutput::FromLogits(std::array<double, 2> logits) {
  ClassifierOutput out;
  out.logits = logits;
  const double hi = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - hi);
  const double e1 = std::exp(logits[1] - hi);
  out.probabilities = {e0 / (e0 + e1), e1 / (e0 + e1)};
  out.label = logits[1] > logits[0] ? 1 : 0;
  return out;
}

std::string ExampleRecord::ClassifierText() const {
  if (dataset == Dataset::kQnli) return EncodePair(question, sentence);
  return text;
}

void to_json(nlohmann::json& j, const ExampleRecord& r) {
  j = nlohmann::json{{"id", r.id}, {"dataset", DatasetName(r.dataset)}};
  if (r.dataset == Dataset::kQnli) {
    j["question"] = r.question;
    j["sentence"] = r.sentence;
  } else {
    j["text"] = r.text;
  }
  j["gold_label"] = r.gold_label;
}

void from_json(const nlohmann::json& j, ExampleRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.dataset = ParseDataset(j.at("dataset").get<std::string>());
  if (r.dataset == Dataset::kQnli) {
    r.question = j.at("question").get<std::string>();
    r.sentence = j.at("sentence").get<std::string>();
  } else {
    r.text = j.at("text").get<std::string>();
  }
  r.gold_label = j.at("gold_label").get<int>();
}

namespace {

template <typename T>
void PutOptional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

template <typename T>
std::optional<T> GetOptional(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const CounterfactualResult& r) {
  j = nlohmann::json::object();
  j["schema"] = kResultSchema;
  j["example_id"] = r.example_id;
  j["dataset"] = DatasetName(r.dataset);
  j["method"] = MethodName(r.method);
  j["original_text"] = r.original_text;
  PutOptional(j, "counterfactual_text", r.counterfactual_text);
  j["original_label"] = r.original_label;
  PutOptional(j, "counterfactual_label", r.counterfactual_label);
  j["flipped"] = r.flipped;
  PutOptional(j, "edits_made", r.edits_made);
  PutOptional(j, "token_count", r.token_count);
  PutOptional(j, "edit_budget", r.edit_budget);
  PutOptional(j, "failure_reason", r.failure_reason);
  PutOptional(j, "perplexity", r.perplexity);
  j["metadata"] = r.metadata;
}

void from_json(const nlohmann::json& j, CounterfactualResult& r) {
  r.example_id = j.at("example_id").get<std::string>();
  r.dataset = ParseDataset(j.at("dataset").get<std::string>());
  r.method = ParseMethod(j.at("method").get<std::string>());
  r.original_text = j.at("original_text").get<std::string>();
  r.counterfactual_text = GetOptional<std::string>(j, "counterfactual_text");
  r.original_label = j.at("original_label").get<int>();
  r.counterfactual_label = GetOptional<int>(j, "counterfactual_label");
  r.flipped = j.at("flipped").get<bool>();
  r.edits_made = GetOptional<int>(j, "edits_made");
  r.token_count = GetOptional<int>(j, "token_count");
  r.edit_budget = GetOptional<int>(j, "edit_budget");
  r.failure_reason = GetOptional<std::string>(j, "failure_reason");
  r.perplexity = GetOptional<double>(j, "perplexity");
  r.metadata.clear();
  if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
    r.metadata = it->get<std::map<std::string, std::string>>();
  }
}

void SetOutcome(CounterfactualResult& result, const std::string& counterfactual,
                int counterfactual_label) {
  result.counterfactual_text = counterfactual;
  result.counterfactual_label = counterfactual_label;
  result.flipped = counterfactual_label != result.original_label;
  result.failure_reason.reset();
}

void SetFailure(CounterfactualResult& result, std::string reason) {
  result.flipped = false;
  result.counterfactual_text.reset();
  result.counterfactual_label.reset();
  result.failure_reason = std::move(reason);
}

}  // namespace cfbench
