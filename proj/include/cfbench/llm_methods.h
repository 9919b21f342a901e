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

// Black-box counterfactual generators: prompted chat models (one-stage and
// two-stage) and a control-code generator adapter. Every output is checked
// by re-classifying it; nothing the generator claims about labels is used.

#ifndef CFBENCH_LLM_METHODS_H_
#define CFBENCH_LLM_METHODS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/gateway.h"
#include "cfbench/types.h"

namespace cfbench {

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
  std::string name;
  std::string version;
  std::string system_text;
  std::string user_text;

  // Substitutes {placeholder} fields. Throws ConfigurationError if any
  // placeholder is left unbound.
  std::string RenderSystem(const Bindings& bindings) const;
  std::string RenderUser(const Bindings& bindings) const;
};

// Fills `text`; exposed for tests.
std::string RenderTemplate(std::string_view text, const Bindings& bindings);

struct DatasetPrompting {
  std::string task_description;
  std::string label_names;
};

struct PromptSet {
  PromptTemplate naive;
  PromptTemplate guided_identify;
  PromptTemplate guided_edit;
  std::map<Dataset, DatasetPrompting> datasets;

  static PromptSet FromJson(const nlohmann::json& j);
  static PromptSet FromFile(const std::filesystem::path& path);
  const DatasetPrompting& For(Dataset d) const;
};

struct ControlCode {
  std::optional<std::string> value;  // absent: the generator picks one

  static ControlCode Default(Dataset d);
  std::string Name() const { return value.value_or("auto"); }
};

// Pulls the counterfactual sentence out of a chat reply. Throws
// Error(kMalformedOutput) if nothing usable remains.
std::string ExtractCounterfactual(std::string_view raw_response);

// Words from a stage-1 reply that occur in `input`; empty when the reply has
// no usable list.
std::vector<std::string> ParseImportantWords(std::string_view response, std::string_view input);

// Guarantees exactly one pair separator, restoring the original sentence part
// when the generator dropped it.
std::string QnliFormatFix(std::string_view generated, const ExampleRecord& original);

CounterfactualResult FizleNaiveGenerate(const ExampleRecord& example, const PromptSet& prompts,
                                        const ModelGateway& gateway);
CounterfactualResult FizleGuidedGenerate(const ExampleRecord& example, const PromptSet& prompts,
                                         const ModelGateway& gateway);
CounterfactualResult ControlledGenerate(const ExampleRecord& example, const ControlCode& code,
                                        const ModelGateway& gateway);

}  // namespace cfbench

#endif  // CFBENCH_LLM_METHODS_H_
