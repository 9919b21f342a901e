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

#include "cfbench/metrics.h"

#include <algorithm>
#include <cmath>

#include "cfbench/error.h"

namespace cfbench {
namespace {

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0 && c < 0xF8) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (c >= 0x80 && (c < 0xC0 || c >= 0xF8 || i + len > s.size())) {
      // Invalid lead byte: keep the raw byte as its own symbol.
      out.push_back(c);
      ++i;
      continue;
    }
    for (size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool InPopulation(const CounterfactualResult& r, MetricPopulation population) {
  if (!r.counterfactual_text) return false;
  return population == MetricPopulation::kAllWithText || r.flipped;
}

void PutInterval(nlohmann::json& j, const char* key, const std::optional<Interval>& v) {
  if (v) {
    j[key] = {v->first, v->second};
  } else {
    j[key] = nullptr;
  }
}

std::optional<Interval> GetInterval(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return Interval{it->at(0).get<double>(), it->at(1).get<double>()};
}

template <typename T>
std::optional<T> GetOpt(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

size_t LevenshteinDistance(std::string_view a, std::string_view b) {
  const std::u32string s = DecodeUtf8(a);
  const std::u32string t = DecodeUtf8(b);
  std::vector<size_t> prev(t.size() + 1), cur(t.size() + 1);
  for (size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= t.size(); ++j) {
      const size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

double NormalizedSimilarity(std::string_view a, std::string_view b) {
  const size_t longest = std::max(DecodeUtf8(a).size(), DecodeUtf8(b).size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(LevenshteinDistance(a, b)) / static_cast<double>(longest);
}

double LabelFlipScore(std::span<const CounterfactualResult> results) {
  if (results.empty()) throw InvalidInput("label flip score of no results");
  size_t flips = 0;
  for (const auto& r : results) {
    if (r.counterfactual_text && r.flipped) ++flips;
  }
  return static_cast<double>(flips) / static_cast<double>(results.size());
}

std::string_view PopulationName(MetricPopulation p) {
  return p == MetricPopulation::kAllWithText ? "all" : "valid";
}

MetricPopulation ParsePopulation(std::string_view name) {
  if (name == "all") return MetricPopulation::kAllWithText;
  if (name == "valid") return MetricPopulation::kValidOnly;
  throw InvalidInput("unknown metric population '" + std::string(name) + "'");
}

std::optional<double> MeanSimilarity(std::span<const CounterfactualResult> results,
                                     MetricPopulation population) {
  if (results.empty()) throw InvalidInput("mean similarity of no results");
  double sum = 0.0;
  size_t n = 0;
  for (const auto& r : results) {
    if (!InPopulation(r, population)) continue;
    sum += NormalizedSimilarity(r.original_text, *r.counterfactual_text);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> MedianPerplexity(std::span<const CounterfactualResult> results,
                                       const PerplexityFn& scorer,
                                       MetricPopulation population) {
  if (results.empty()) throw InvalidInput("median perplexity of no results");
  std::vector<double> values;
  for (const auto& r : results) {
    if (InPopulation(r, population)) values.push_back(scorer(*r.counterfactual_text));
  }
  if (values.empty()) return std::nullopt;
  return ComputeStatistic(values, Statistic::kMedian);
}

double SortedQuantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval BootstrapCi(std::span<const double> values, Statistic stat, int n_boot, double alpha,
                     uint64_t seed) {
  if (values.empty()) throw InvalidInput("bootstrap of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  const auto dist = kernels::parallel::BootstrapDistribution(values, stat, n_boot, seed);
  const double point = ComputeStatistic(values, stat);
  double lo = SortedQuantile(dist, alpha / 2.0);
  double hi = SortedQuantile(dist, 1.0 - alpha / 2.0);
  return {std::min(lo, point), std::max(hi, point)};
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json::object();
  j["schema"] = "cfbench.report/1";
  j["method"] = MethodName(r.method);
  j["dataset"] = DatasetName(r.dataset);
  j["n"] = r.n;
  j["lfs"] = r.lfs;
  j["lfs_ci"] = {r.lfs_ci.first, r.lfs_ci.second};
  j["mean_similarity"] = r.mean_similarity ? nlohmann::json(*r.mean_similarity) : nullptr;
  PutInterval(j, "similarity_ci", r.similarity_ci);
  j["median_perplexity"] = r.median_perplexity ? nlohmann::json(*r.median_perplexity) : nullptr;
  PutInterval(j, "perplexity_ci", r.perplexity_ci);
  j["scorer_model_id"] = r.scorer_model_id;
  j["config_fingerprint"] = r.config_fingerprint;
  j["skipped_reason"] = r.skipped_reason ? nlohmann::json(*r.skipped_reason) : nullptr;
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  r.method = ParseMethod(j.at("method").get<std::string>());
  r.dataset = ParseDataset(j.at("dataset").get<std::string>());
  r.n = j.at("n").get<int>();
  r.lfs = j.at("lfs").get<double>();
  r.lfs_ci = {j.at("lfs_ci").at(0).get<double>(), j.at("lfs_ci").at(1).get<double>()};
  r.mean_similarity = GetOpt<double>(j, "mean_similarity");
  r.similarity_ci = GetInterval(j, "similarity_ci");
  r.median_perplexity = GetOpt<double>(j, "median_perplexity");
  r.perplexity_ci = GetInterval(j, "perplexity_ci");
  r.scorer_model_id = j.value("scorer_model_id", std::string());
  r.config_fingerprint = j.value("config_fingerprint", std::string());
  r.skipped_reason = GetOpt<std::string>(j, "skipped_reason");
}

MetricsReport BuildReport(std::span<const CounterfactualResult> results,
                          const PerplexityFn& scorer, std::string scorer_model_id,
                          const ReportOptions& options) {
  if (results.empty()) throw InvalidInput("cannot report on zero results");
  MetricsReport report;
  report.method = results.front().method;
  report.dataset = results.front().dataset;
  for (const auto& r : results) {
    if (r.method != report.method || r.dataset != report.dataset) {
      throw InvalidInput("report mixes methods or datasets");
    }
  }
  report.n = static_cast<int>(results.size());
  report.scorer_model_id = std::move(scorer_model_id);

  std::vector<double> flips;
  std::vector<kernels::StringPair> pairs;
  std::vector<std::string> texts;
  for (const auto& r : results) {
    flips.push_back(r.counterfactual_text && r.flipped ? 1.0 : 0.0);
    if (InPopulation(r, options.population)) {
      pairs.emplace_back(r.original_text, *r.counterfactual_text);
      texts.push_back(*r.counterfactual_text);
    }
  }
  report.lfs = LabelFlipScore(results);
  report.lfs_ci = BootstrapCi(flips, Statistic::kProportion, options.n_boot, options.alpha,
                              options.seed);
  if (!pairs.empty()) {
    const auto sims = kernels::parallel::BatchSimilarity(pairs);
    report.mean_similarity = ComputeStatistic(sims, Statistic::kMean);
    report.similarity_ci =
        BootstrapCi(sims, Statistic::kMean, options.n_boot, options.alpha, options.seed + 1);
    if (scorer) {
      std::vector<double> ppl;
      ppl.reserve(texts.size());
      for (const auto& t : texts) ppl.push_back(scorer(t));
      report.median_perplexity = ComputeStatistic(ppl, Statistic::kMedian);
      report.perplexity_ci =
          BootstrapCi(ppl, Statistic::kMedian, options.n_boot, options.alpha, options.seed + 2);
    }
  }
  return report;
}

}  // namespace cfbench
