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

// Validity, sparsity and plausibility metrics with percentile-bootstrap
// confidence intervals.

#ifndef CFBENCH_METRICS_H_
#define CFBENCH_METRICS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfbench/kernels.h"
#include "cfbench/types.h"
#include "json.hpp"

namespace cfbench {

// Character-level edit distance over UTF-8 code points.
size_t LevenshteinDistance(std::string_view a, std::string_view b);

// 1 - distance / max(|a|, |b|) in code points; two empty strings give 1.
double NormalizedSimilarity(std::string_view a, std::string_view b);

// Fraction of results whose counterfactual flipped the label; results
// without a counterfactual count as non-flips.
double LabelFlipScore(std::span<const CounterfactualResult> results);

// Which results enter the similarity and perplexity averages.
enum class MetricPopulation {
  kAllWithText,  // every result that produced counterfactual text
  kValidOnly,    // only flipped results
};

std::string_view PopulationName(MetricPopulation p);
MetricPopulation ParsePopulation(std::string_view name);

// Mean normalized similarity over the population; nullopt when empty.
std::optional<double> MeanSimilarity(std::span<const CounterfactualResult> results,
                                     MetricPopulation population = MetricPopulation::kAllWithText);

using PerplexityFn = std::function<double(const std::string&)>;

std::optional<double> MedianPerplexity(std::span<const CounterfactualResult> results,
                                       const PerplexityFn& scorer,
                                       MetricPopulation population = MetricPopulation::kAllWithText);

using Interval = std::pair<double, double>;

// Percentile bootstrap. The endpoints are the (alpha/2, 1 - alpha/2)
// quantiles (linear interpolation) of the resampled statistic, widened to
// include the point estimate when resampling noise leaves it outside.
Interval BootstrapCi(std::span<const double> values, Statistic stat, int n_boot = 1000,
                     double alpha = 0.05, uint64_t seed = 0);

// Linear-interpolation quantile of an ascending sample.
double SortedQuantile(std::span<const double> sorted, double q);

struct MetricsReport {
  Method method = Method::kHotFlip;
  Dataset dataset = Dataset::kSst2;
  int n = 0;
  double lfs = 0.0;
  Interval lfs_ci{0.0, 0.0};
  std::optional<double> mean_similarity;
  std::optional<Interval> similarity_ci;
  std::optional<double> median_perplexity;
  std::optional<Interval> perplexity_ci;
  std::string scorer_model_id;
  std::string config_fingerprint;
  // Set when the method could not run on this dataset at all.
  std::optional<std::string> skipped_reason;
};

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

struct ReportOptions {
  int n_boot = 1000;
  double alpha = 0.05;
  uint64_t seed = 0;
  MetricPopulation population = MetricPopulation::kAllWithText;
};

// Per-example values feed the bootstrap: flip indicators, per-pair
// similarities and per-counterfactual perplexities. An empty scorer leaves
// the perplexity fields unset.
MetricsReport BuildReport(std::span<const CounterfactualResult> results,
                          const PerplexityFn& scorer, std::string scorer_model_id,
                          const ReportOptions& options);

}  // namespace cfbench

#endif  // CFBENCH_METRICS_H_
