// Copyright 2026 The UnionSearch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "unionsearch/engine.hpp"

namespace unionsearch {

// query id -> ids of the lake tables that are unionable with it
using GroundTruth = std::map<std::string, std::set<std::string>>;

// Reads `query_id,candidate_id` lines; a matching header line is skipped.
GroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Only the first k results count; missing positions are misses.
PrecisionRecall precision_recall(std::span<const std::string> results, const std::set<std::string>& gt, std::size_t k);

// (1/k) * sum_{i=1..k} P@i -- the cutoff average of precision, which is not
// the hit-position average precision used elsewhere in IR.
double map_at_k(std::span<const std::string> results, const std::set<std::string>& gt, std::size_t k);

// min(k, |gt|) / |gt|, the best recall any top-k list can reach.
double recall_upper_bound(std::size_t k, std::size_t gt_size);

struct QueryMetrics {
  std::string query_id;
  double map = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double recall_upper_bound = 0.0;
  double relative_recall = 0.0;
  std::size_t pool_size = 0;
  double pool_fraction = 0.0;  // share of the candidate pool that is in the ground truth
};

struct MetricReport {
  std::size_t k = 0;
  std::vector<QueryMetrics> queries;
  double mean_map = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_relative_recall = 0.0;
  double mean_pool_size = 0.0;
  double mean_pool_fraction = 0.0;
  std::vector<std::string> skipped;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

QueryMetrics score_query(const std::string& query_id, std::span<const std::string> results,
                         std::span<const ScoredId> pool, const std::set<std::string>& gt, std::size_t k);
void finalize(MetricReport& report);

struct SyntheticConfig {
  std::size_t clusters = 40;
  std::size_t tables_per_cluster = 8;
  std::size_t rows = 20;
  std::size_t cols = 5;
  std::size_t pool_size = 16;     // distinct values per column pool
  double pool_share = 0.6;        // share of each pool a table draws from
  double typo_rate = 0.02;
  double column_dropout = 0.10;
  std::uint64_t seed = 2024;
};

struct SyntheticLake {
  DataLake lake;
  GroundTruth ground_truth;
  std::map<std::string, std::size_t> cluster_of;
};

// Clusters draw disjoint topic vocabularies; member tables sample rows from
// the cluster's column pools with per-table typos and column dropout. Ground
// truth is same-cluster membership without the table itself.
SyntheticLake gen_synthetic_lake(const SyntheticConfig& cfg);

// Moves the first `per_cluster` tables of every cluster out of the lake and
// returns them as queries; ground truth is restricted to the remaining lake.
DataLake hold_out_queries(SyntheticLake& synth, std::size_t per_cluster = 1);

MetricReport evaluate(const EngineState& state, const GroundTruth& gt, const DataLake& queries,
                      const SearchConfig& cfg);

struct BenchmarkRun {
  MetricReport report;
  std::vector<double> epoch_loss;
  EngineState state;
  std::vector<TableEmbedding> embeddings;
  double train_seconds = 0.0;
  double query_seconds = 0.0;
};

// Trains on the lake (query tables must not be in it), builds the engine and
// evaluates every query that has ground truth.
BenchmarkRun run_benchmark(const DataLake& lake, const GroundTruth& gt, const DataLake& queries,
                           const EngineConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace unionsearch
