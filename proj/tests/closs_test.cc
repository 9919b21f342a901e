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

#include "cfbench/closs.h"
#include "cfbench/error.h"
#include "test_util.h"

namespace cfbench {
namespace {

// Margin is a nonlinear function of how many w0 and w1 tokens appear, so any
// two w0 placements are interchangeable players.
class CountClassifier : public Classifier {
 public:
  explicit CountClassifier(const Vocabulary& v) : w0_(*v.Find("w0")), w1_(*v.Find("w1")) {}
  std::string ModelId() const override { return "count"; }
  Logits Forward(std::span<const int> ids) const override {
    double a = 0, b = 0;
    for (int id : ids) {
      a += id == w0_;
      b += id == w1_;
    }
    return {0.0, a * a - 2.0 * b + a * b - 0.5};
  }

 private:
  int w0_, w1_;
};

ModelGateway CountGateway() {
  GatewayParts parts;
  parts.tokenizer = testing::ToyTokenizer(4);
  parts.classifier = std::make_shared<CountClassifier>(parts.tokenizer->vocab());
  return ModelGateway(std::move(parts));
}

SubstitutionState StateFor(const ModelGateway& gw, const std::string& text) {
  SubstitutionState s;
  s.ids = gw.Tokenize(text).token_ids;
  s.output = gw.ClassifyIds(s.ids);
  return s;
}

// Full enumeration: sum over subsets S of the other players of
// |S|! (n - |S|)! / (n + 1)! * (v(S + c) - v(S)).
double ExactShapley(const Edit& c, const std::vector<Edit>& players,
                    const SubstitutionState& state, int target, const ModelGateway& gw) {
  const size_t n = players.size();
  double phi = 0.0;
  for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
    std::vector<Edit> s;
    for (size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) s.push_back(players[i]);
    }
    const double weight = std::tgamma(s.size() + 1.0) * std::tgamma(n - s.size() + 1.0) /
                          std::tgamma(n + 2.0);
    const double without = CoalitionValue(s, state, target, gw);
    s.push_back(c);
    phi += weight * (CoalitionValue(s, state, target, gw) - without);
  }
  return phi;
}

TEST(Shapley, SingletonGameIsExactMarginal) {
  const auto gw = CountGateway();
  const auto state = StateFor(gw, "w2 w2 w3");
  const Edit c{1, 5};  // w0
  const double expect = CoalitionValue(std::vector<Edit>{c}, state, 1, gw) -
                        CoalitionValue({}, state, 1, gw);
  for (int w : {1, 3, 10}) {
    EXPECT_DOUBLE_EQ(EstimateShapley(c, {}, state, 1, gw, w, 9), expect);
  }
}

TEST(Shapley, SymmetricPlayersGetEqualEstimates) {
  const auto gw = CountGateway();
  const auto state = StateFor(gw, "w2 w2 w2 w3");
  const Edit a{0, 5}, b{1, 5}, c{2, 6};
  for (uint64_t seed : {0, 1, 2, 3}) {
    const std::vector<Edit> for_a = {b, c}, for_b = {a, c};
    EXPECT_DOUBLE_EQ(EstimateShapley(a, for_a, state, 1, gw, 7, seed),
                     EstimateShapley(b, for_b, state, 1, gw, 7, seed));
  }
}

TEST(Shapley, ExactOracleIsEfficient) {
  const auto gw = CountGateway();
  const auto state = StateFor(gw, "w2 w2 w2 w3");
  const std::vector<Edit> all = {{0, 5}, {1, 5}, {2, 6}, {3, 5}};
  double total = 0.0;
  for (size_t i = 0; i < all.size(); ++i) {
    std::vector<Edit> others;
    for (size_t j = 0; j < all.size(); ++j) {
      if (j != i) others.push_back(all[j]);
    }
    total += ExactShapley(all[i], others, state, 1, gw);
  }
  EXPECT_NEAR(total, CoalitionValue(all, state, 1, gw) - CoalitionValue({}, state, 1, gw),
              1e-12);
}

TEST(Shapley, EstimateConvergesToEnumeration) {
  const auto gw = CountGateway();
  const auto state = StateFor(gw, "w2 w2 w2 w3");
  const Edit c{0, 5};
  const std::vector<Edit> players = {{1, 5}, {2, 6}, {3, 5}};
  const double exact = ExactShapley(c, players, state, 1, gw);
  EXPECT_NEAR(EstimateShapley(c, players, state, 1, gw, 4000, 1), exact, 0.05);
}

TEST(Shapley, DeterministicForSeed) {
  const auto gw = CountGateway();
  const auto state = StateFor(gw, "w2 w2 w2 w3");
  const std::vector<Edit> players = {{1, 5}, {2, 6}, {3, 5}};
  EXPECT_EQ(EstimateShapley({0, 5}, players, state, 1, gw, 20, 4),
            EstimateShapley({0, 5}, players, state, 1, gw, 20, 4));
  EXPECT_THROW(EstimateShapley({0, 5}, players, state, 1, gw, 0, 4), Error);
}

class ClossToy : public ::testing::Test {
 protected:
  // Linear scalar classifier; the MLM offers w0..w3 everywhere.
  ClossToy() {
    GatewayParts parts;
    parts.tokenizer = testing::ToyTokenizer(6);
    const auto& v = parts.tokenizer->vocab();
    EmbeddingTable table(v.size(), 1);
    const double values[] = {10.0, -1.0, -0.5, 0.2, 3.0, -3.0};
    for (int i = 0; i < 6; ++i) table.row(5 + i)[0] = static_cast<float>(values[i]);
    Matrix w(2, 1);
    w.at(0, 0) = -0.5;
    w.at(1, 0) = 0.5;
    parts.classifier = std::make_shared<BagOfEmbeddingsClassifier>("s", std::move(table),
                                                                   std::move(w), Logits{});
    std::map<size_t, std::vector<TokenProb>> mlm;
    for (size_t p = 0; p < 16; ++p) {
      mlm[p] = {{5, 0.4}, {6, 0.3}, {7, 0.2}, {8, 0.1}, {2, 0.5}};
    }
    parts.mlm = std::make_shared<TableMaskedLm>(mlm);
    gw_ = std::make_unique<ModelGateway>(std::move(parts));
  }
  ExampleRecord Example(const std::string& text) const {
    ExampleRecord r;
    r.id = "c";
    r.text = text;
    return r;
  }
  std::unique_ptr<ModelGateway> gw_;
};

TEST_F(ClossToy, PoolFiltersAndKeepsMlmOrder) {
  const auto problem = MakeProblem(*gw_, "w1 w2 w1", 0.3);
  const auto pool = ProposeSubstitutes(problem, *gw_, 3);
  ASSERT_EQ(pool.positions.size(), 3u);
  // Position 0 holds w1 (id 6): [CLS] (id 2) and w1 itself are dropped.
  ASSERT_EQ(pool.positions[0].size(), 3u);
  EXPECT_EQ(pool.positions[0][0].token, 5);
  EXPECT_EQ(pool.positions[0][1].token, 7);
  EXPECT_EQ(pool.positions[0][2].token, 8);
  EXPECT_FALSE(pool.Contains(0, 6));
  EXPECT_TRUE(pool.Contains(1, 6));
  // Gradient score is the exact change for a linear model: w0 replacing w1.
  EXPECT_NEAR(pool.positions[0][0].gradient_score, 11.0, 1e-6);
}

TEST_F(ClossToy, PlayersAreBestGradientEntries) {
  const auto problem = MakeProblem(*gw_, "w1 w2 w1", 0.3);
  const auto pool = ProposeSubstitutes(problem, *gw_, 4);
  const auto players = PromisingPlayers(pool, problem.Root(), problem, 1);
  ASSERT_EQ(players.size(), 2u);
  EXPECT_EQ(players[0], (Edit{0, 5}));
  EXPECT_EQ(players[1], (Edit{2, 5}));
}

TEST_F(ClossToy, FlipsWithPoolTokensWithinBudget) {
  SearchConfig config;
  const auto r = ClossGenerate(Example("w1 w2 w1 w3 w2"), config, *gw_);
  ASSERT_TRUE(r.flipped) << r.failure_reason.value_or("");
  EXPECT_EQ(r.method, Method::kCloss);
  EXPECT_EQ(r.edits_made, 1);
  EXPECT_LE(*r.edits_made, *r.edit_budget);
  EXPECT_NE(r.counterfactual_text->find("w0"), std::string::npos);
}

TEST_F(ClossToy, OnlyMlmProposalsAreUsed) {
  // w4 would flip in one edit but the MLM never proposes it; w0 does too.
  SearchConfig config;
  config.k = 2;
  const auto r = ClossGenerate(Example("w5 w5 w5 w5 w5 w5 w5"), config, *gw_);
  ASSERT_TRUE(r.counterfactual_text.has_value());
  for (const auto& word : testing::ToyWords(6)) {
    if (word != "w0" && word != "w5" && word != "w1") {
      EXPECT_EQ(r.counterfactual_text->find(word), std::string::npos) << word;
    }
  }
}

TEST_F(ClossToy, EditCapHolds) {
  SearchConfig config;
  config.substitutions_after_loc = 0.2;
  for (const char* text : {"w1 w1 w1 w1 w1 w1 w1 w1 w1 w1", "w5 w5 w5 w5 w5 w5", "w2"}) {
    const auto r = ClossGenerate(Example(text), config, *gw_);
    ASSERT_TRUE(r.edit_budget.has_value());
    EXPECT_EQ(*r.edit_budget, MaxEdits(*r.token_count, 0.2));
    EXPECT_LE(r.edits_made.value_or(0), *r.edit_budget) << text;
  }
}

TEST_F(ClossToy, SerialAndParallelAgree) {
  SearchConfig serial;
  serial.parallel = false;
  const auto a = ClossGenerate(Example("w1 w2 w1 w3 w2 w5 w5"), serial, *gw_);
  const auto b = ClossGenerate(Example("w1 w2 w1 w3 w2 w5 w5"), SearchConfig{}, *gw_);
  EXPECT_EQ(a.counterfactual_text, b.counterfactual_text);
}

TEST(Closs, NeedsMlmAndGradients) {
  ModelGateway gw(testing::LinearParts(5, 3, 1));
  ExampleRecord r;
  r.text = "w1 w2";
  try {
    ClossGenerate(r, SearchConfig{}, gw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
}

}  // namespace
}  // namespace cfbench
