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

#include "cfbench/dataset.h"

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cfbench/error.h"
#include "cfbench/random.h"
#include "cfbench/text.h"

namespace cfbench {
namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> cols;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, '\t')) cols.push_back(cell);
  if (!line.empty() && line.back() == '\t') cols.emplace_back();
  return cols;
}

int ParseQnliLabel(const std::string& raw) {
  if (raw == "entailment" || raw == "0") return kQnliEntailment;
  if (raw == "not_entailment" || raw == "1") return kQnliNotEntailment;
  throw Error(ErrorKind::kIngestion, "unknown QNLI label '" + raw + "'");
}

}  // namespace

std::filesystem::path DatasetSource::PathFor(Dataset d) const {
  return data_dir / std::string(DatasetName(d)) / (split + ".tsv");
}

std::vector<ExampleRecord> LoadAllRecords(Dataset dataset, const DatasetSource& source) {
  const auto path = source.PathFor(dataset);
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIngestion, "missing dataset file " + path.string());
  }
  std::vector<ExampleRecord> records;
  std::string line;
  bool header = true;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = SplitTabs(line);
    ExampleRecord rec;
    rec.dataset = dataset;
    rec.id = std::string(DatasetName(dataset)) + "-" + source.split + "-" +
             std::to_string(row++);
    if (dataset == Dataset::kSst2) {
      if (cols.size() < 2) {
        throw Error(ErrorKind::kIngestion, "malformed SST-2 row in " + path.string());
      }
      rec.text = Preprocess(cols[0]);
      rec.gold_label = std::stoi(cols[1]);
      if (rec.text.empty()) continue;
    } else {
      if (cols.size() < 4) {
        throw Error(ErrorKind::kIngestion, "malformed QNLI row in " + path.string());
      }
      rec.question = Preprocess(cols[1]);
      rec.sentence = Preprocess(cols[2]);
      rec.gold_label = ParseQnliLabel(cols[3]);
      if (rec.question.empty() || rec.sentence.empty()) continue;
    }
    if (rec.gold_label != 0 && rec.gold_label != 1) {
      throw Error(ErrorKind::kIngestion, "label out of range in " + path.string());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<size_t> SampleIndices(size_t population, size_t n, uint64_t seed) {
  if (n > population) {
    throw InvalidInput("cannot sample " + std::to_string(n) + " of " +
                       std::to_string(population) + " rows");
  }
  std::vector<size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < n; ++i) {
    const size_t j = i + UniformIndex(rng, population - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

std::vector<ExampleRecord> LoadDataset(Dataset dataset, size_t n, uint64_t seed,
                                       const DatasetSource& source) {
  if (n == 0) throw InvalidInput("sample size must be positive");
  auto all = LoadAllRecords(dataset, source);
  if (n > all.size()) {
    throw InvalidInput("requested " + std::to_string(n) + " examples but " +
                       DatasetName(dataset).data() + " has " +
                       std::to_string(all.size()));
  }
  std::vector<ExampleRecord> out;
  out.reserve(n);
  for (size_t i : SampleIndices(all.size(), n, seed)) out.push_back(all[i]);
  return out;
}

void SaveRecords(const std::vector<ExampleRecord>& records,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << nlohmann::json(r).dump() << '\n';
}

std::vector<ExampleRecord> LoadRecords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIngestion, "missing records file " + path.string());
  std::vector<ExampleRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line).get<ExampleRecord>());
  }
  return out;
}

}  // namespace cfbench
