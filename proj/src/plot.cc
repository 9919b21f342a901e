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

#include "cfbench/plot.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cfbench/error.h"

namespace cfbench {
namespace {

constexpr const char* kMissing = "—";
constexpr MetricColumn kColumns[] = {MetricColumn::kLfs, MetricColumn::kSimilarity,
                                     MetricColumn::kPerplexity};
constexpr const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                                    "#937860"};

struct Grid {
  std::vector<Dataset> datasets;
  std::vector<Method> methods;
  std::map<std::pair<Method, Dataset>, const MetricsReport*> cells;
};

Grid Arrange(std::span<const MetricsReport> reports) {
  Grid g;
  for (const auto& r : reports) {
    g.cells[{r.method, r.dataset}] = &r;
    if (std::find(g.datasets.begin(), g.datasets.end(), r.dataset) == g.datasets.end()) {
      g.datasets.push_back(r.dataset);
    }
  }
  std::sort(g.datasets.begin(), g.datasets.end());
  for (Method m : AllMethods()) {
    for (Dataset d : g.datasets) {
      if (g.cells.count({m, d})) {
        g.methods.push_back(m);
        break;
      }
    }
  }
  return g;
}

std::optional<double> Value(const MetricsReport& r, MetricColumn c) {
  if (r.skipped_reason || r.n == 0) return std::nullopt;
  switch (c) {
    case MetricColumn::kLfs:
      return r.lfs;
    case MetricColumn::kSimilarity:
      return r.mean_similarity;
    case MetricColumn::kPerplexity:
      return r.median_perplexity;
  }
  return std::nullopt;
}

std::optional<Interval> Ci(const MetricsReport& r, MetricColumn c) {
  if (r.skipped_reason || r.n == 0) return std::nullopt;
  switch (c) {
    case MetricColumn::kLfs:
      return r.lfs_ci;
    case MetricColumn::kSimilarity:
      return r.similarity_ci;
    case MetricColumn::kPerplexity:
      return r.perplexity_ci;
  }
  return std::nullopt;
}

// Value as displayed: two decimals, perplexity as an integer.
double Displayed(double v, MetricColumn c) {
  if (c == MetricColumn::kPerplexity) return std::round(v);
  return std::round(v * 100.0) / 100.0;
}

std::string Format(double v, MetricColumn c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, c == MetricColumn::kPerplexity ? "%.0f" : "%.2f",
                Displayed(v, c));
  return buf;
}

std::string DatasetTitle(Dataset d) { return d == Dataset::kSst2 ? "SST-2" : "QNLI"; }

std::string MethodTitle(Method m) {
  switch (m) {
    case Method::kHotFlip:
      return "HotFlip";
    case Method::kCloss:
      return "CLOSS";
    case Method::kPolyjuice:
      return "Polyjuice";
    case Method::kFizleNaive:
      return "FIZLE-naive";
    case Method::kFizleGuided:
      return "FIZLE-guided";
  }
  return std::string(MethodName(m));
}

std::string ColumnTitle(MetricColumn c) {
  switch (c) {
    case MetricColumn::kLfs:
      return "LFS ↑";
    case MetricColumn::kSimilarity:
      return "L.Sim ↑";
    case MetricColumn::kPerplexity:
      return "PPL ↓";
  }
  return "";
}

}  // namespace

std::vector<std::vector<std::string>> TableCells(std::span<const MetricsReport> reports) {
  const Grid g = Arrange(reports);
  std::vector<std::vector<std::string>> cells(
      g.methods.size(), std::vector<std::string>(g.datasets.size() * 3, kMissing));
  for (size_t di = 0; di < g.datasets.size(); ++di) {
    for (size_t ci = 0; ci < 3; ++ci) {
      const MetricColumn col = kColumns[ci];
      std::vector<std::optional<double>> shown(g.methods.size());
      std::optional<double> best;
      for (size_t mi = 0; mi < g.methods.size(); ++mi) {
        auto it = g.cells.find({g.methods[mi], g.datasets[di]});
        if (it == g.cells.end()) continue;
        const auto v = Value(*it->second, col);
        if (!v || !std::isfinite(*v)) continue;
        shown[mi] = Displayed(*v, col);
        if (!best || (col == MetricColumn::kPerplexity ? *shown[mi] < *best : *shown[mi] > *best)) {
          best = shown[mi];
        }
      }
      for (size_t mi = 0; mi < g.methods.size(); ++mi) {
        if (!shown[mi]) continue;
        std::string text = Format(*shown[mi], col);
        if (*shown[mi] == *best) text = "**" + text + "**";
        cells[mi][di * 3 + ci] = text;
      }
    }
  }
  return cells;
}

std::string RenderTable(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidInput("no reports to render");
  const Grid g = Arrange(reports);
  const auto cells = TableCells(reports);
  std::ostringstream out;
  out << "| Method |";
  for (Dataset d : g.datasets) {
    for (MetricColumn c : kColumns) out << ' ' << DatasetTitle(d) << ' ' << ColumnTitle(c) << " |";
  }
  out << "\n|---|";
  for (size_t i = 0; i < g.datasets.size() * 3; ++i) out << "---:|";
  out << '\n';
  for (size_t mi = 0; mi < g.methods.size(); ++mi) {
    out << "| " << MethodTitle(g.methods[mi]) << " |";
    for (const auto& c : cells[mi]) out << ' ' << c << " |";
    out << '\n';
  }
  std::vector<std::string> notes;
  for (const auto& r : reports) {
    if (r.skipped_reason) {
      notes.push_back(DatasetTitle(r.dataset) + " " + MethodTitle(r.method) + " skipped: " +
                      *r.skipped_reason);
    }
  }
  if (!notes.empty()) {
    out << '\n';
    for (const auto& n : notes) out << "- " << n << '\n';
  }
  if (!reports.front().config_fingerprint.empty()) {
    out << "\nconfig_fingerprint: " << reports.front().config_fingerprint << '\n';
  }
  return out.str();
}

size_t PlotPanelCount(std::span<const MetricsReport> reports) {
  return Arrange(reports).datasets.size() * 3;
}

void EmitPlot(std::span<const MetricsReport> reports, const std::filesystem::path& path) {
  if (reports.empty()) throw InvalidInput("no reports to plot");
  const Grid g = Arrange(reports);
  constexpr double kPanelW = 300, kPanelH = 220, kMargin = 40, kLegendH = 40;
  const double width = kPanelW * 3 + kMargin;
  const double height = kPanelH * g.datasets.size() + kLegendH + kMargin;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<!-- config_fingerprint: " << reports.front().config_fingerprint << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (size_t mi = 0; mi < g.methods.size(); ++mi) {
    const double x = kMargin + 140.0 * mi;
    svg << "<rect x=\"" << x << "\" y=\"12\" width=\"12\" height=\"12\" fill=\""
        << kPalette[mi % 6] << "\"/><text x=\"" << x + 16 << "\" y=\"22\">"
        << MethodTitle(g.methods[mi]) << "</text>\n";
  }
  for (size_t di = 0; di < g.datasets.size(); ++di) {
    for (size_t ci = 0; ci < 3; ++ci) {
      const MetricColumn col = kColumns[ci];
      const double px = kMargin / 2 + ci * kPanelW + 30;
      const double py = kLegendH + di * kPanelH + 20;
      const double pw = kPanelW - 50, ph = kPanelH - 50;
      double top = col == MetricColumn::kPerplexity ? 0.0 : 1.0;
      for (Method m : g.methods) {
        auto it = g.cells.find({m, g.datasets[di]});
        if (it == g.cells.end()) continue;
        if (auto v = Value(*it->second, col); v && std::isfinite(*v)) top = std::max(top, *v);
        if (auto c = Ci(*it->second, col); c && std::isfinite(c->second)) {
          top = std::max(top, c->second);
        }
      }
      if (col == MetricColumn::kPerplexity) top = top > 0 ? top * 1.1 : 1.0;
      auto y_of = [&](double v) { return py + ph - ph * std::clamp(v / top, 0.0, 1.0); };

      svg << "<g class=\"panel\" data-dataset=\"" << DatasetName(g.datasets[di])
          << "\" data-metric=\"" << ci << "\">\n";
      svg << "<text x=\"" << px << "\" y=\"" << py - 6 << "\" font-weight=\"bold\">"
          << DatasetTitle(g.datasets[di]) << ' ' << ColumnTitle(col) << "</text>\n";
      svg << "<line x1=\"" << px << "\" y1=\"" << py << "\" x2=\"" << px << "\" y2=\""
          << py + ph << "\" stroke=\"black\"/>\n";
      svg << "<line x1=\"" << px << "\" y1=\"" << py + ph << "\" x2=\"" << px + pw
          << "\" y2=\"" << py + ph << "\" stroke=\"black\"/>\n";
      for (double tick : {0.0, 0.5, 1.0}) {
        char label[32];
        std::snprintf(label, sizeof label, col == MetricColumn::kPerplexity ? "%.0f" : "%.1f",
                      tick * top);
        svg << "<text x=\"" << px - 4 << "\" y=\"" << y_of(tick * top) + 4
            << "\" text-anchor=\"end\">" << label << "</text>\n";
      }
      const double slot = pw / std::max<size_t>(g.methods.size(), 1);
      for (size_t mi = 0; mi < g.methods.size(); ++mi) {
        auto it = g.cells.find({g.methods[mi], g.datasets[di]});
        if (it == g.cells.end()) continue;
        const auto v = Value(*it->second, col);
        if (!v || !std::isfinite(*v)) continue;
        const double x = px + slot * mi + slot * 0.15;
        const double bw = slot * 0.7;
        svg << "<rect x=\"" << x << "\" y=\"" << y_of(*v) << "\" width=\"" << bw
            << "\" height=\"" << py + ph - y_of(*v) << "\" fill=\"" << kPalette[mi % 6]
            << "\"/>\n";
        if (auto c = Ci(*it->second, col)) {
          const double cx = x + bw / 2;
          svg << "<path class=\"ci\" d=\"M" << cx - 4 << ' ' << y_of(c->first) << " H"
              << cx + 4 << " M" << cx << ' ' << y_of(c->first) << " V" << y_of(c->second)
              << " M" << cx - 4 << ' ' << y_of(c->second) << " H" << cx + 4
              << "\" stroke=\"black\" fill=\"none\"/>\n";
        }
      }
      svg << "</g>\n";
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plot " + path.string());
  out << svg.str();
  if (!out) throw IoError("failed writing plot " + path.string());
}

}  // namespace cfbench
