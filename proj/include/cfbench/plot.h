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

// Rendering of metric reports: a markdown comparison table and an SVG
// grouped-bar figure with confidence-interval whiskers.

#ifndef CFBENCH_PLOT_H_
#define CFBENCH_PLOT_H_

#include <filesystem>
#include <span>
#include <string>

#include "cfbench/metrics.h"

namespace cfbench {

enum class MetricColumn { kLfs, kSimilarity, kPerplexity };

// Rows are methods, column groups datasets. The best value in each column
// (after rounding to the displayed precision) is bolded; a missing value
// renders as an em dash.
std::string RenderTable(std::span<const MetricsReport> reports);

// Cells of the table body: [method row][dataset * 3 + metric], exposed for
// tests. Bold cells are wrapped in "**".
std::vector<std::vector<std::string>> TableCells(std::span<const MetricsReport> reports);

// One panel per (dataset, metric), bars per method. Throws IoError if the
// file cannot be written.
void EmitPlot(std::span<const MetricsReport> reports, const std::filesystem::path& path);

// Panel count the plot for `reports` will contain.
size_t PlotPanelCount(std::span<const MetricsReport> reports);

}  // namespace cfbench

#endif  // CFBENCH_PLOT_H_
