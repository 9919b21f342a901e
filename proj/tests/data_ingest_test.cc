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

#include <gtest/gtest.h>

#include <set>

#include "cfbench/dataset.h"
#include "cfbench/error.h"
#include "cfbench/text.h"
#include "cfbench/tokenizer.h"
#include "cfbench/types.h"
#include "test_util.h"

namespace cfbench {
namespace {

using testing::ScratchDir;
using testing::WriteText;

TEST(Preprocess, LowercasesAndCollapsesWhitespace) {
  EXPECT_EQ(Preprocess("  The  Movie\tWAS\n good "), "the movie was good");
  EXPECT_EQ(Preprocess(""), "");
  EXPECT_EQ(Preprocess("   "), "");
}

TEST(Preprocess, KeepsSeparatorSpelling) {
  EXPECT_EQ(Preprocess("Who Won? [SEP] The Team won."), "who won? [SEP] the team won.");
}

TEST(Preprocess, Idempotent) {
  for (const char* s : {"A  b C", " x [SEP]  Y ", "Already clean", "\tTabs\tand  ALL\n"}) {
    const std::string once = Preprocess(s);
    EXPECT_EQ(Preprocess(once), once) << s;
  }
}

TEST(Pairs, EncodeSplitRoundTrip) {
  const std::string enc = EncodePair("what is it?", "it is a cat.");
  EXPECT_EQ(enc, "what is it? [SEP] it is a cat.");
  const auto [q, s] = SplitPair(enc);
  EXPECT_EQ(q, "what is it?");
  EXPECT_EQ(s, "it is a cat.");
  EXPECT_EQ(CountOccurrences(enc, kSepToken), 1u);
}

TEST(Pairs, RejectsEmptyParts) {
  EXPECT_THROW(EncodePair("", "x"), Error);
  EXPECT_THROW(EncodePair("x", ""), Error);
  EXPECT_THROW(SplitPair("no separator here"), Error);
}

TEST(Vocabulary, PrependsSpecials) {
  const auto v = Vocabulary::FromTokens({"hello", "##s"});
  EXPECT_EQ(v.size(), 7u);
  EXPECT_TRUE(v.IsSpecial(v.cls_id()));
  EXPECT_TRUE(v.IsSpecial(v.sep_id()));
  EXPECT_FALSE(v.IsSpecial(*v.Find("hello")));
  EXPECT_TRUE(v.IsContinuation(*v.Find("##s")));
  EXPECT_FALSE(v.IsContinuation(*v.Find("hello")));
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  ScratchDir dir;
  const auto v = Vocabulary::FromTokens({"a", "b", "##c"});
  v.Save(dir / "vocab.txt");
  const auto w = Vocabulary::FromFile(dir / "vocab.txt");
  ASSERT_EQ(w.size(), v.size());
  for (size_t i = 0; i < v.size(); ++i) EXPECT_EQ(w.Token(int(i)), v.Token(int(i)));
}

TEST(WordPiece, GreedyLongestMatch) {
  WordPieceTokenizer tok(Vocabulary::FromTokens({"un", "##believ", "##able", "movie", "!"}));
  const auto seq = tok.Tokenize("Unbelievable movie!");
  ASSERT_EQ(seq.surface_tokens.size(), 5u);
  EXPECT_EQ(seq.surface_tokens[0], "un");
  EXPECT_EQ(seq.surface_tokens[1], "##believ");
  EXPECT_EQ(seq.surface_tokens[2], "##able");
  EXPECT_EQ(seq.surface_tokens[3], "movie");
  EXPECT_EQ(seq.surface_tokens[4], "!");
  EXPECT_EQ(WordPieceTokenizer::Detokenize(seq.surface_tokens), "unbelievable movie !");
}

TEST(WordPiece, OffsetsPointIntoText) {
  WordPieceTokenizer tok(Vocabulary::FromTokens({"good", "film"}));
  const auto seq = tok.Tokenize("good film");
  ASSERT_EQ(seq.char_offsets.size(), 2u);
  for (size_t i = 0; i < seq.size(); ++i) {
    const auto [b, e] = seq.char_offsets[i];
    EXPECT_EQ(seq.text.substr(b, e - b), seq.surface_tokens[i]);
  }
}

TEST(WordPiece, UnknownWordKeepsSurface) {
  WordPieceTokenizer tok(Vocabulary::FromTokens({"good"}));
  const auto seq = tok.Tokenize("good zyzzyva");
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq.token_ids[1], tok.vocab().unk_id());
  EXPECT_EQ(seq.surface_tokens[1], "zyzzyva");
}

TEST(WordPiece, PairEncodingUsesSeparatorToken) {
  WordPieceTokenizer tok(Vocabulary::FromTokens({"who", "won", "?", "we", "did", "."}));
  const auto seq = tok.Tokenize(EncodePair("who won?", "we did."));
  // who won ? [SEP] we did .
  ASSERT_EQ(seq.size(), 7u);
  EXPECT_EQ(seq.token_ids[3], tok.vocab().sep_id());
  EXPECT_EQ(seq.token_ids[0], *tok.vocab().Find("who"));
  EXPECT_EQ(seq.token_ids[2], *tok.vocab().Find("?"));
  EXPECT_EQ(seq.token_ids[6], *tok.vocab().Find("."));
}

class DatasetFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    std::filesystem::create_directories(dir_.path() / "sst2");
    std::filesystem::create_directories(dir_.path() / "qnli");
    std::string sst = "sentence\tlabel\n";
    for (int i = 0; i < 30; ++i) {
      sst += "Sentence  NUMBER " + std::to_string(i) + "\t" + std::to_string(i % 2) + "\n";
    }
    WriteText(dir_.path() / "sst2" / "validation.tsv", sst);
    WriteText(dir_.path() / "qnli" / "validation.tsv",
              "index\tquestion\tsentence\tlabel\n"
              "0\tWho?\tHim.\tentailment\n"
              "1\tWhere?\tNowhere.\tnot_entailment\r\n");
  }
  DatasetSource Source() const { return {dir_.path(), "validation"}; }
  ScratchDir dir_;
};

TEST_F(DatasetFiles, LoadsAndPreprocesses) {
  const auto sst = LoadAllRecords(Dataset::kSst2, Source());
  ASSERT_EQ(sst.size(), 30u);
  EXPECT_EQ(sst[3].text, "sentence number 3");
  EXPECT_EQ(sst[3].gold_label, 1);
  const auto qnli = LoadAllRecords(Dataset::kQnli, Source());
  ASSERT_EQ(qnli.size(), 2u);
  EXPECT_EQ(qnli[0].gold_label, kQnliEntailment);
  EXPECT_EQ(qnli[1].gold_label, kQnliNotEntailment);
  EXPECT_EQ(qnli[1].ClassifierText(), "where? [SEP] nowhere.");
}

TEST_F(DatasetFiles, SamplingIsSeededAndDistinct) {
  const auto a = LoadDataset(Dataset::kSst2, 12, 7, Source());
  const auto b = LoadDataset(Dataset::kSst2, 12, 7, Source());
  const auto c = LoadDataset(Dataset::kSst2, 12, 8, Source());
  std::set<std::string> ids;
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    ids.insert(a[i].id);
    differs |= a[i].id != c[i].id;
  }
  EXPECT_EQ(ids.size(), 12u);
  EXPECT_TRUE(differs);
}

TEST_F(DatasetFiles, OversamplingIsAnError) {
  EXPECT_THROW(LoadDataset(Dataset::kQnli, 3, 0, Source()), Error);
}

TEST_F(DatasetFiles, MissingFileIsIngestionError) {
  try {
    LoadAllRecords(Dataset::kSst2, {dir_.path(), "test"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIngestion);
  }
}

TEST_F(DatasetFiles, RecordsRoundTrip) {
  const auto recs = LoadAllRecords(Dataset::kQnli, Source());
  SaveRecords(recs, dir_.path() / "r.jsonl");
  const auto back = LoadRecords(dir_.path() / "r.jsonl");
  ASSERT_EQ(back.size(), recs.size());
  EXPECT_EQ(back[1].question, recs[1].question);
  EXPECT_EQ(back[1].sentence, recs[1].sentence);
  EXPECT_EQ(back[1].gold_label, recs[1].gold_label);
}

TEST(SampleIndices, FullPermutationCoversPopulation) {
  auto idx = SampleIndices(50, 50, 3);
  std::sort(idx.begin(), idx.end());
  for (size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
}

TEST(Types, ResultJsonRoundTrip) {
  CounterfactualResult r;
  r.example_id = "sst2-validation-4";
  r.method = Method::kCloss;
  r.original_text = "a b";
  SetOutcome(r, "a c", 1);
  r.edits_made = 1;
  r.perplexity = 12.5;
  r.wall_time = 3.0;
  r.metadata["k"] = "v";
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("schema"), kResultSchema);
  EXPECT_FALSE(j.contains("wall_time"));
  const auto back = j.get<CounterfactualResult>();
  EXPECT_EQ(back.counterfactual_text, r.counterfactual_text);
  EXPECT_EQ(back.flipped, r.flipped);
  EXPECT_EQ(back.perplexity, r.perplexity);
  EXPECT_EQ(back.metadata, r.metadata);
  EXPECT_EQ(back.method, Method::kCloss);
}

TEST(Types, OutcomeAndFailure) {
  CounterfactualResult r;
  r.original_label = 0;
  SetOutcome(r, "x", 0);
  EXPECT_FALSE(r.flipped);
  SetOutcome(r, "x", 1);
  EXPECT_TRUE(r.flipped);
  SetFailure(r, "budget_exhausted");
  EXPECT_FALSE(r.flipped);
  EXPECT_FALSE(r.counterfactual_text.has_value());
  EXPECT_EQ(r.failure_reason, "budget_exhausted");
}

TEST(Types, NamesParse) {
  for (Method m : AllMethods()) EXPECT_EQ(ParseMethod(MethodName(m)), m);
  EXPECT_EQ(ParseDataset("qnli"), Dataset::kQnli);
  EXPECT_THROW(ParseDataset("imdb"), Error);
  EXPECT_THROW(ParseMethod("bogus"), Error);
}

TEST(Types, ClassifierOutputTiesGoToZero) {
  EXPECT_EQ(ClassifierOutput::FromLogits({1.0, 1.0}).label, 0);
  const auto o = ClassifierOutput::FromLogits({0.0, 2.0});
  EXPECT_EQ(o.label, 1);
  EXPECT_NEAR(o.probabilities[0] + o.probabilities[1], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(o.Margin(1), 2.0);
}

}  // namespace
}  // namespace cfbench
