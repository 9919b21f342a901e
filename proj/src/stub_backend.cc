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

#include "cfbench/stub_backend.h"

#include <fstream>
#include <random>
#include <set>

#include "cfbench/error.h"
#include "cfbench/random.h"
#include "cfbench/toy_models.h"

namespace cfbench {

StubLexicon StubLexicon::FromJson(const nlohmann::json& j) {
  StubLexicon l;
  l.label1 = j.value("label1", l.label1);
  l.label0 = j.value("label0", l.label0);
  l.strength = j.value("strength", l.strength);
  l.noise = j.value("noise", l.noise);
  l.scale = j.value("scale", l.scale);
  l.dim = j.value("dim", l.dim);
  if (l.dim < 1) throw ConfigurationError("stub dim must be positive");
  return l;
}

StubLexicon StubLexicon::FromFile(const std::filesystem::path& path, Dataset dataset) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read stub lexicon " + path.string());
  const auto j = nlohmann::json::parse(in);
  const std::string key(DatasetName(dataset));
  if (!j.contains(key)) throw ConfigurationError("stub lexicon has no section " + key);
  return FromJson(j.at(key));
}

std::vector<std::string> SplitWords(std::string_view text) {
  static const WordPieceTokenizer bare(Vocabulary::FromTokens({}));
  std::vector<std::string> out;
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return out;
  for (const auto& s : bare.Tokenize(text).surface_tokens) {
    if (s != "[SEP]") out.push_back(s);
  }
  return out;
}

GatewayParts MakeStubParts(const std::vector<std::string>& corpus, const StubLexicon& lexicon,
                           uint64_t seed) {
  std::set<std::string> words;
  for (const auto& text : corpus) {
    for (auto& w : SplitWords(text)) words.insert(std::move(w));
  }
  words.insert(lexicon.label1.begin(), lexicon.label1.end());
  words.insert(lexicon.label0.begin(), lexicon.label0.end());
  auto vocab = Vocabulary::FromTokens({words.begin(), words.end()});
  auto tokenizer = std::make_shared<WordPieceTokenizer>(vocab);

  // Axis 0 decides the label; the remaining axes are noise that gives each
  // word a distinct embedding.
  const size_t d = lexicon.dim;
  std::mt19937_64 rng(seed);
  EmbeddingTable table(vocab.size(), d);
  const std::set<std::string> pos(lexicon.label1.begin(), lexicon.label1.end());
  const std::set<std::string> neg(lexicon.label0.begin(), lexicon.label0.end());
  for (size_t v = 0; v < vocab.size(); ++v) {
    auto row = table.row(v);
    for (auto& x : row) x = static_cast<float>(Normal(rng) / std::sqrt(double(d)));
    const std::string& w = vocab.Token(static_cast<int>(v));
    if (vocab.IsSpecial(static_cast<int>(v))) {
      row[0] = 0.0f;
    } else if (pos.count(w)) {
      row[0] = static_cast<float>(lexicon.strength);
    } else if (neg.count(w)) {
      row[0] = static_cast<float>(-lexicon.strength);
    } else {
      row[0] = static_cast<float>(lexicon.noise * Normal(rng));
    }
  }
  Matrix weights(2, d);
  weights.at(0, 0) = -lexicon.scale / 2.0;
  weights.at(1, 0) = lexicon.scale / 2.0;
  auto classifier = std::make_shared<BagOfEmbeddingsClassifier>(
      "stub-lexicon-bag", std::move(table), std::move(weights), Logits{0.0, 0.0},
      BagOfEmbeddingsClassifier::Pooling::kMean);

  std::vector<std::vector<int>> id_corpus;
  for (const auto& text : corpus) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    id_corpus.push_back(tokenizer->Tokenize(text).token_ids);
  }
  std::vector<bool> proposable(vocab.size());
  for (size_t v = 0; v < vocab.size(); ++v) proposable[v] = !vocab.IsSpecial(static_cast<int>(v));

  GatewayParts parts;
  parts.tokenizer = tokenizer;
  parts.classifier = classifier;
  parts.mlm = std::make_shared<BigramMaskedLm>(vocab.size(), proposable, id_corpus);
  parts.scorer = std::make_shared<BigramLm>(corpus);
  parts.generator = std::make_shared<RuleNegationGenerator>();
  return parts;
}

}  // namespace cfbench
