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

#include <cmath>
#include <random>
#include <set>

#include "cfbench/error.h"
#include "cfbench/gateway.h"
#include "cfbench/process_backend.h"
#include "cfbench/random.h"
#include "cfbench/toy_models.h"
#include "test_util.h"

namespace cfbench {
namespace {

// Black-box classifier with a short context window.
class ShortClassifier : public Classifier {
 public:
  std::string ModelId() const override { return "short"; }
  size_t MaxLength() const override { return 3; }
  Logits Forward(std::span<const int> ids) const override {
    return {0.0, static_cast<double>(ids.size())};
  }
};

TEST(Gateway, ClassifyIsDeterministicAndBatchConsistent) {
  ModelGateway gw(testing::LinearParts(8, 6, 3));
  const auto a = gw.Classify("w1 w2 w3");
  const auto b = gw.Classify("w1 w2 w3");
  EXPECT_EQ(a.logits, b.logits);
  const auto batch = gw.ClassifyBatch({gw.Tokenize("w1 w2 w3").token_ids,
                                       gw.Tokenize("w4").token_ids});
  EXPECT_EQ(batch[0].logits, a.logits);
  EXPECT_EQ(batch[1].logits, gw.Classify("w4").logits);
}

TEST(Gateway, TruncatesToClassifierWindow) {
  GatewayParts parts;
  parts.tokenizer = testing::ToyTokenizer(8);
  parts.classifier = std::make_shared<ShortClassifier>();
  ModelGateway gw(std::move(parts));
  const auto seq = gw.Tokenize("w1 w2 w3 w4 w5");
  EXPECT_TRUE(seq.truncated);
  EXPECT_EQ(seq.size(), 3u);
  EXPECT_FALSE(gw.Tokenize("w1 w2").truncated);
}

TEST(Gateway, MissingPartsRaiseTypedErrors) {
  GatewayParts parts;
  parts.tokenizer = testing::ToyTokenizer(8);
  parts.classifier = std::make_shared<ShortClassifier>();
  ModelGateway gw(std::move(parts));
  EXPECT_FALSE(gw.HasGradients());
  try {
    gw.EmbeddingGradients(gw.Tokenize("w1"), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
  EXPECT_THROW(gw.MlmTopK(gw.Tokenize("w1"), 0, 3), Error);
  EXPECT_THROW(gw.SequencePerplexity("w1"), Error);
  EXPECT_THROW(gw.Generator(), Error);
  try {
    gw.ChatComplete("s", "u");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
  EXPECT_THROW(gw.Classify("   "), Error);
}

TEST(Gateway, LinearGradientIsWeightRow) {
  auto parts = testing::LinearParts(8, 5, 11);
  const auto* clf = dynamic_cast<const BagOfEmbeddingsClassifier*>(parts.classifier.get());
  ModelGateway gw(parts);
  const auto g = gw.EmbeddingGradients(gw.Tokenize("w0 w3 w3"), 1);
  ASSERT_EQ(g.values.rows, 3u);
  for (size_t p = 0; p < 3; ++p) {
    for (size_t j = 0; j < 5; ++j) EXPECT_EQ(g.values.at(p, j), clf->weights().at(1, j));
  }
}

// Central differences of logit[label] along each embedding coordinate.
TEST(Gateway, MlpGradientMatchesFiniteDifferences) {
  const auto clf = TanhMlpClassifier::Random(13, 6, 9, 5);
  const std::vector<int> ids = {5, 9, 7, 12};
  const double eps = 1e-3;
  for (int label : {0, 1}) {
    const Matrix g = clf.InputGradients(ids, label);
    const Matrix base = clf.Lookup(ids);
    for (size_t p = 0; p < ids.size(); ++p) {
      for (size_t j = 0; j < 6; ++j) {
        Matrix up = base, down = base;
        up.at(p, j) += eps;
        down.at(p, j) -= eps;
        const double fd =
            (clf.ForwardEmbeddings(up)[label] - clf.ForwardEmbeddings(down)[label]) / (2 * eps);
        EXPECT_NEAR(g.at(p, j), fd, 1e-5) << "label " << label << " p " << p << " j " << j;
      }
    }
  }
}

TEST(Gateway, MeanPoolingScalesGradient) {
  auto sum = BagOfEmbeddingsClassifier::Random(9, 4, 2);
  BagOfEmbeddingsClassifier mean("m", sum.mutable_embeddings(), sum.weights(), {0.0, 0.0},
                                 BagOfEmbeddingsClassifier::Pooling::kMean);
  const std::vector<int> ids = {5, 6, 7, 8};
  const Matrix gs = sum.InputGradients(ids, 0);
  const Matrix gm = mean.InputGradients(ids, 0);
  for (size_t i = 0; i < gs.data.size(); ++i) EXPECT_DOUBLE_EQ(gm.data[i], gs.data[i] / 4.0);
}

TEST(Models, UniformLmPerplexityIsVocabularySize) {
  UniformLm lm(50);
  EXPECT_DOUBLE_EQ(lm.Perplexity("any text at all"), 50.0);
  EXPECT_DOUBLE_EQ(lm.Perplexity("one"), 50.0);
}

TEST(Models, BigramLmMatchesHandCount) {
  // Words: <unk>, a, b, c. P(b | a) = (1 + 1) / (2 + 4).
  BigramLm lm({"a b", "a c"}, 1.0);
  EXPECT_NEAR(lm.Perplexity("a b"), 3.0, 1e-12);
  // Single word: unigram (2 + 1) / (4 + 4).
  EXPECT_NEAR(lm.Perplexity("a"), 8.0 / 3.0, 1e-12);
}

TEST(Models, BigramMlmSortedUniqueAndProposable) {
  const size_t v = 10;
  std::vector<bool> proposable(v, true);
  for (int s = 0; s < 5; ++s) proposable[s] = false;
  BigramMaskedLm mlm(v, proposable, {{5, 6, 7}, {5, 6, 8}, {9, 6, 7}});
  const auto out = mlm.Predict(std::vector<int>{5, 6, 7}, 1, 4);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].token, 6);
  std::set<int> seen;
  for (size_t i = 0; i < out.size(); ++i) {
    EXPECT_GE(out[i].token, 5);
    EXPECT_TRUE(seen.insert(out[i].token).second);
    if (i > 0) EXPECT_GE(out[i - 1].probability, out[i].probability);
  }
  double total = 0.0;
  for (const auto& t : mlm.Predict(std::vector<int>{5, 6, 7}, 1, 100)) total += t.probability;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Models, SortAndTruncateBreaksTiesById) {
  std::vector<TokenProb> p = {{4, 0.2}, {2, 0.5}, {3, 0.2}, {1, 0.1}};
  SortAndTruncate(p, 3);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].token, 2);
  EXPECT_EQ(p[1].token, 3);
  EXPECT_EQ(p[2].token, 4);
}

TEST(Models, NegationGeneratorRules) {
  RuleNegationGenerator gen;
  EXPECT_EQ(gen.Generate("it is good", std::nullopt).at(0), "it is not good");
  EXPECT_EQ(gen.Generate("it is not good", std::nullopt).at(0), "it is good");
}

TEST(Random, UniformIndexStaysInRange) {
  std::mt19937_64 rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[UniformIndex(rng, 7)];
  for (int c : counts) EXPECT_GT(c, 850);
  EXPECT_NE(MixSeed(1, 0), MixSeed(1, 1));
}

// --- process backend, against the numpy toy server ---------------------------

std::vector<std::string> ToyServerCommand() {
  return {"python3", std::string(CFBENCH_SOURCE_DIR) + "/tools/model_server.py", "--toy",
          "--vocab-size", "12", "--dim", "6", "--seed", "4"};
}

TEST(ProcessBackend, ClassifierMatchesClosedForm) {
  auto server = std::make_shared<ModelServer>(ToyServerCommand());
  ServerClassifier clf(server);
  const auto& info = server->info().at("classifier");
  const auto w = info.at("toy_weights").get<std::vector<std::vector<double>>>();
  const auto b = info.at("toy_bias").get<std::vector<double>>();
  const auto* table = clf.Embeddings();
  ASSERT_EQ(table->vocab_size(), 12u);
  const std::vector<int> ids = {5, 7, 7, 11};
  const Logits got = clf.Forward(ids);
  for (int c = 0; c < 2; ++c) {
    double expect = b[c];
    for (int id : ids) {
      for (size_t j = 0; j < 6; ++j) expect += w[c][j] * static_cast<double>(table->row(id)[j]);
    }
    EXPECT_NEAR(got[c], expect, 1e-9);
  }
  const Matrix g = clf.InputGradients(ids, 1);
  for (size_t j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(g.at(2, j), w[1][j]);
  const auto batch = clf.ForwardBatch({ids, {6}});
  EXPECT_EQ(batch[0], got);
}

TEST(ProcessBackend, OtherModelsAndErrors) {
  auto server = std::make_shared<ModelServer>(ToyServerCommand());
  ServerMaskedLm mlm(server);
  const auto top = mlm.Predict(std::vector<int>{5, 6, 7}, 1, 3);
  ASSERT_EQ(top.size(), 3u);
  for (const auto& t : top) EXPECT_GE(t.token, 5);
  ServerCausalLm lm(server);
  EXPECT_DOUBLE_EQ(lm.Perplexity("w1 w2"), 3.0);
  ServerGenerator gen(server);
  EXPECT_EQ(gen.Generate("w1 w2", std::nullopt).at(0), "w2 w1");
  try {
    server->Call({{"op", "nope"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGatewayUnavailable);
  }
}

TEST(ProcessBackend, DeadServerIsUnavailable) {
  try {
    ModelServer server({"python3", "-c", "import sys; sys.exit(0)"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGatewayUnavailable);
  }
}

}  // namespace
}  // namespace cfbench
