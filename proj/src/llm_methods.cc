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

#include "cfbench/llm_methods.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "cfbench/error.h"
#include "cfbench/text.h"

namespace cfbench {
namespace {

constexpr const char* kLabelPrefixes[] = {
    "counterfactual text", "counterfactual sentence", "counterfactual", "modified text",
    "modified sentence",   "modified input",          "edited text",    "edited sentence",
    "revised text",        "revised sentence",        "rewritten text", "rewritten sentence",
    "new text",            "new sentence",            "output",         "answer",
    "result"};

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> Lines(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void EraseAll(std::string& s, std::string_view what) {
  for (size_t pos; (pos = s.find(what)) != std::string::npos;) s.erase(pos, what.size());
}

// Body of the first ``` fence, without its info string.
std::optional<std::string> FencedBody(std::string_view text) {
  const size_t open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  size_t body = text.find('\n', open);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  const size_t close = text.find("```", body);
  return std::string(text.substr(body, close == std::string_view::npos ? text.npos : close - body));
}

// Text after a "Label:" prefix, or nullopt if the line has none.
std::optional<std::string> AfterLabel(const std::string& line) {
  std::string plain = line;
  EraseAll(plain, "**");
  plain = Trim(plain);
  const std::string lower = Lower(plain);
  for (const char* prefix : kLabelPrefixes) {
    const std::string p(prefix);
    if (lower.rfind(p, 0) != 0) continue;
    size_t i = p.size();
    while (i < plain.size() && plain[i] == ' ') ++i;
    if (i < plain.size() && plain[i] == ':') return Trim(plain.substr(i + 1));
  }
  return std::nullopt;
}

std::string StripQuotes(std::string s) {
  static const std::pair<std::string_view, std::string_view> kPairs[] = {
      {"\"", "\""}, {"'", "'"}, {"`", "`"}, {"“", "”"}, {"‘", "’"}};
  bool changed = true;
  while (changed) {
    changed = false;
    s = Trim(s);
    for (const auto& [open, close] : kPairs) {
      if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
        s = s.substr(open.size(), s.size() - open.size() - close.size());
        changed = true;
        break;
      }
    }
  }
  return s;
}

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::set<std::string> WordSet(std::string_view text) {
  std::set<std::string> words;
  std::string cur;
  for (char c : Lower(text)) {
    if (IsWordChar(c)) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      words.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.insert(cur);
  return words;
}

class Timer {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CounterfactualResult StartResult(const ExampleRecord& example, Method method,
                                 const ModelGateway& gateway) {
  CounterfactualResult r;
  r.example_id = example.id;
  r.dataset = example.dataset;
  r.method = method;
  r.original_text = example.ClassifierText();
  r.original_label = gateway.Classify(r.original_text).label;
  return r;
}

void Finish(CounterfactualResult& r, const std::string& text, const ModelGateway& gateway) {
  SetOutcome(r, text, gateway.Classify(text).label);
}

// Maps chat failures to result failures; other errors propagate.
template <typename Fn>
void GuardChat(CounterfactualResult& r, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::kUpstreamUnavailable:
      case ErrorKind::kConfiguration:
        SetFailure(r, "llm_unavailable");
        break;
      case ErrorKind::kMalformedOutput:
        SetFailure(r, "malformed_output");
        break;
      default:
        throw;
    }
    r.metadata["error"] = e.what();
  }
}

Bindings BaseBindings(const ExampleRecord& example, const PromptSet& prompts) {
  const auto& d = prompts.For(example.dataset);
  return {{"task_description", d.task_description},
          {"label_names", d.label_names},
          {"input_text", example.ClassifierText()}};
}

std::string AskNaive(const ExampleRecord& example, const PromptSet& prompts,
                     const ModelGateway& gateway, CounterfactualResult& r) {
  const Bindings b = BaseBindings(example, prompts);
  const std::string user = prompts.naive.RenderUser(b);
  r.metadata["prompt_version"] = prompts.naive.name + "@" + prompts.naive.version;
  const std::string reply = gateway.ChatComplete(prompts.naive.RenderSystem(b), user);
  r.metadata["response"] = reply;
  return ExtractCounterfactual(reply);
}

PromptTemplate TemplateFromJson(const nlohmann::json& j, const std::string& name) {
  PromptTemplate t;
  t.name = name;
  t.version = j.at("version").get<std::string>();
  t.system_text = j.at("system").get<std::string>();
  t.user_text = j.value("user", std::string("{input_text}"));
  return t;
}

}  // namespace

std::string RenderTemplate(std::string_view text, const Bindings& bindings) {
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    const size_t open = text.find('{', i);
    if (open == std::string_view::npos) {
      out.append(text.substr(i));
      break;
    }
    out.append(text.substr(i, open - i));
    const size_t close = text.find('}', open);
    if (close == std::string_view::npos) {
      out.append(text.substr(open));
      break;
    }
    const std::string key(text.substr(open + 1, close - open - 1));
    const bool identifier =
        !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        });
    if (!identifier) {
      // Literal brace, e.g. JSON in an example.
      out.push_back('{');
      i = open + 1;
      continue;
    }
    auto it = bindings.find(key);
    if (it == bindings.end()) {
      throw ConfigurationError("prompt placeholder {" + key + "} is unbound");
    }
    out.append(it->second);
    i = close + 1;
  }
  return out;
}

std::string PromptTemplate::RenderSystem(const Bindings& bindings) const {
  return RenderTemplate(system_text, bindings);
}

std::string PromptTemplate::RenderUser(const Bindings& bindings) const {
  return RenderTemplate(user_text, bindings);
}

PromptSet PromptSet::FromJson(const nlohmann::json& j) {
  PromptSet p;
  const auto& t = j.at("templates");
  p.naive = TemplateFromJson(t.at("fizle_naive"), "fizle_naive");
  p.guided_identify = TemplateFromJson(t.at("fizle_guided_identify"), "fizle_guided_identify");
  p.guided_edit = TemplateFromJson(t.at("fizle_guided_edit"), "fizle_guided_edit");
  for (const auto& [name, d] : j.at("datasets").items()) {
    p.datasets[ParseDataset(name)] = {d.at("task_description").get<std::string>(),
                                      d.at("label_names").get<std::string>()};
  }
  return p;
}

PromptSet PromptSet::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read prompt file " + path.string());
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("bad prompt file " + path.string() + ": " + e.what());
  }
}

const DatasetPrompting& PromptSet::For(Dataset d) const {
  auto it = datasets.find(d);
  if (it == datasets.end()) {
    throw ConfigurationError("no prompt settings for " + std::string(DatasetName(d)));
  }
  return it->second;
}

ControlCode ControlCode::Default(Dataset d) {
  if (d == Dataset::kSst2) return {"negation"};
  return {};
}

std::string ExtractCounterfactual(std::string_view raw_response) {
  std::string body = FencedBody(raw_response).value_or(std::string(raw_response));
  const auto lines = Lines(body);
  std::string pick;
  bool found = false;
  for (size_t i = 0; i < lines.size() && !found; ++i) {
    if (auto rest = AfterLabel(lines[i])) {
      pick = !rest->empty() ? *rest : (i + 1 < lines.size() ? lines[i + 1] : "");
      found = true;
    }
  }
  if (!found) {
    // Skip lead-ins such as "Here is the rewrite:"; later lines are commentary.
    for (const auto& line : lines) {
      if (line.back() == ':') continue;
      pick = line;
      break;
    }
  }
  EraseAll(pick, "**");
  std::string out = Preprocess(StripQuotes(pick));
  if (out.empty()) {
    throw Error(ErrorKind::kMalformedOutput, "no counterfactual found in response");
  }
  return out;
}

std::vector<std::string> ParseImportantWords(std::string_view response, std::string_view input) {
  std::string body = FencedBody(response).value_or(std::string(response));
  std::vector<std::string> items;
  try {
    const auto j = nlohmann::json::parse(Trim(body));
    if (j.is_array()) {
      for (const auto& v : j) {
        if (v.is_string()) items.push_back(v.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception&) {
    std::string cur;
    for (char c : body) {
      if (c == ',' || c == ';' || c == '\n') {
        items.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    items.push_back(cur);
  }
  const auto vocabulary = WordSet(input);
  std::vector<std::string> words;
  for (auto item : items) {
    item = Trim(item);
    // List markers: "-", "*", "1.", "2)".
    while (!item.empty() && (item[0] == '-' || item[0] == '*' || item[0] == '[')) {
      item = Trim(item.substr(1));
    }
    size_t digits = 0;
    while (digits < item.size() && std::isdigit(static_cast<unsigned char>(item[digits]))) {
      ++digits;
    }
    if (digits > 0 && digits < item.size() && (item[digits] == '.' || item[digits] == ')')) {
      item = Trim(item.substr(digits + 1));
    }
    while (!item.empty() && item.back() == ']') item.pop_back();
    item = Lower(StripQuotes(item));
    if (item.empty() || item.find(' ') != std::string::npos) continue;
    if (!vocabulary.count(item)) continue;
    if (std::find(words.begin(), words.end(), item) == words.end()) words.push_back(item);
  }
  return words;
}

std::string QnliFormatFix(std::string_view generated, const ExampleRecord& original) {
  std::string g = Preprocess(generated);
  const std::string sep(kPairSeparator);
  const std::string bare(kSepToken);
  // A separator dangling at either end counts as missing.
  if (g.ends_with(" " + bare)) g = Trim(g.substr(0, g.size() - bare.size() - 1));
  if (g.starts_with(bare + " ")) g = Trim(g.substr(bare.size() + 1));
  if (g == bare) g.clear();
  const size_t first = g.find(sep);
  if (first == std::string::npos) {
    if (g.empty()) g = original.question;
    return g + sep + original.sentence;
  }
  const size_t second = g.find(sep, first + sep.size());
  if (second == std::string::npos) return g;
  return g.substr(0, second);
}

CounterfactualResult FizleNaiveGenerate(const ExampleRecord& example, const PromptSet& prompts,
                                        const ModelGateway& gateway) {
  Timer timer;
  auto r = StartResult(example, Method::kFizleNaive, gateway);
  r.metadata["llm_model"] = gateway.chat_model_id();
  GuardChat(r, [&] { Finish(r, AskNaive(example, prompts, gateway, r), gateway); });
  r.wall_time = timer.Seconds();
  return r;
}

CounterfactualResult FizleGuidedGenerate(const ExampleRecord& example, const PromptSet& prompts,
                                         const ModelGateway& gateway) {
  Timer timer;
  auto r = StartResult(example, Method::kFizleGuided, gateway);
  r.metadata["llm_model"] = gateway.chat_model_id();
  GuardChat(r, [&] {
    Bindings b = BaseBindings(example, prompts);
    const std::string user1 = prompts.guided_identify.RenderUser(b);
    const std::string reply1 =
        gateway.ChatComplete(prompts.guided_identify.RenderSystem(b), user1);
    r.metadata["stage1_prompt_version"] =
        prompts.guided_identify.name + "@" + prompts.guided_identify.version;
    r.metadata["stage1_user"] = user1;
    r.metadata["stage1_response"] = reply1;
    const auto words = ParseImportantWords(reply1, example.ClassifierText());
    if (words.empty()) {
      r.metadata["fallback"] = "stage1_parse_failed";
      Finish(r, AskNaive(example, prompts, gateway, r), gateway);
      return;
    }
    std::string joined;
    for (const auto& w : words) joined += (joined.empty() ? "" : ", ") + w;
    b["important_words"] = joined;
    const std::string user2 = prompts.guided_edit.RenderUser(b);
    const std::string reply2 = gateway.ChatComplete(prompts.guided_edit.RenderSystem(b), user2);
    r.metadata["important_words"] = joined;
    r.metadata["stage2_prompt_version"] =
        prompts.guided_edit.name + "@" + prompts.guided_edit.version;
    r.metadata["stage2_user"] = user2;
    r.metadata["stage2_response"] = reply2;
    Finish(r, ExtractCounterfactual(reply2), gateway);
  });
  r.wall_time = timer.Seconds();
  return r;
}

CounterfactualResult ControlledGenerate(const ExampleRecord& example, const ControlCode& code,
                                        const ModelGateway& gateway) {
  const auto& generator = gateway.Generator();
  Timer timer;
  auto r = StartResult(example, Method::kPolyjuice, gateway);
  r.metadata["generator_model"] = generator.ModelId();
  r.metadata["control_code"] = code.Name();
  const auto outputs = generator.Generate(r.original_text, code.value);
  std::string text = outputs.empty() ? std::string() : Preprocess(outputs.front());
  if (!text.empty() && example.dataset == Dataset::kQnli) text = QnliFormatFix(text, example);
  if (text.empty()) {
    SetFailure(r, "malformed_output");
  } else {
    Finish(r, text, gateway);
  }
  r.wall_time = timer.Seconds();
  return r;
}

}  // namespace cfbench
