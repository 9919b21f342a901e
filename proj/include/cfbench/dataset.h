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

// SST-2 / QNLI ingestion. Files follow the GLUE TSV layout:
//
//   <data_dir>/sst2/<split>.tsv   columns: sentence, label
//   <data_dir>/qnli/<split>.tsv   columns: index, question, sentence, label
//
// QNLI labels are encoded entailment -> 0, not_entailment -> 1.

#ifndef CFBENCH_DATASET_H_
#define CFBENCH_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfbench/types.h"

namespace cfbench {

inline constexpr int kQnliEntailment = 0;
inline constexpr int kQnliNotEntailment = 1;

struct DatasetSource {
  std::filesystem::path data_dir;
  std::string split = "validation";

  std::filesystem::path PathFor(Dataset d) const;
};

// Every row of the split, preprocessed, in file order.
std::vector<ExampleRecord> LoadAllRecords(Dataset dataset, const DatasetSource& source);

// n rows sampled uniformly without replacement; fully determined by seed.
std::vector<ExampleRecord> LoadDataset(Dataset dataset, size_t n, uint64_t seed,
                                       const DatasetSource& source);

// Draws n distinct indices from [0, population) with a seeded Fisher-Yates
// prefix shuffle.
std::vector<size_t> SampleIndices(size_t population, size_t n, uint64_t seed);

void SaveRecords(const std::vector<ExampleRecord>& records,
                 const std::filesystem::path& path);
std::vector<ExampleRecord> LoadRecords(const std::filesystem::path& path);

}  // namespace cfbench

#endif  // CFBENCH_DATASET_H_
