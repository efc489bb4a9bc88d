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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "unionsearch/encoder.hpp"
#include "unionsearch/reranker.hpp"
#include "unionsearch/serializer.hpp"
#include "unionsearch/table.hpp"
#include "unionsearch/vector_index.hpp"

namespace unionsearch {

struct SearchConfig {
  std::size_t k = 10;
  double tau_abs = 0.5;
  double tau_drop = 0.2;
  std::size_t pool_multiplier = 3;

  void validate() const;
};

// Cutoff over a non-increasing score list, 1-based: starts at k and scans
// i = k+1..n, stopping at i-1 when scores[i] < tau_abs or the step from
// scores[i-1] exceeds tau_drop. Without a trigger the whole list is kept;
// lists shorter than k are kept whole.
std::size_t adaptive_cutoff(std::span<const double> scores, std::size_t k, double tau_abs, double tau_drop);

struct CandidatePool {
  std::vector<ScoredId> init;  // top pool_multiplier * k by table score
  std::size_t cutoff = 0;      // number of leading entries kept

  std::span<const ScoredId> selected() const { return {init.data(), cutoff}; }
};

CandidatePool retrieve_candidates(const EmbeddingIndex& index, std::span<const double> query, const SearchConfig& cfg);

struct ResultEntry {
  std::string id;
  double table_score = 0.0;  // mu_T
  double alignment = 0.0;    // mu_A
  double score = 0.0;        // mu_T + mu_A
};

struct QueryResult {
  std::vector<ResultEntry> entries;
};

// Scores every selected candidate and returns the best k by final score,
// ties by id.
QueryResult rerank(const CandidatePool& pool, const std::vector<ColumnVector>& query_columns,
                   const ColumnVectorStore& store, std::size_t k);

struct EngineState {
  EncoderParams params;
  SerializerConfig serializer;
  EmbeddingIndex index;
  ColumnVectorStore columns;
  WordVectorProvider words;
};

struct SearchOutcome {
  QueryResult result;
  CandidatePool pool;
  TableEmbedding query_embedding;
};

TableEmbedding embed_table(const Table& table, const EncoderParams& params, const SerializerConfig& serializer);
std::vector<TableEmbedding> embed_lake(const DataLake& lake, const EncoderParams& params,
                                       const SerializerConfig& serializer);

SearchOutcome search_embedded(std::span<const double> query_embedding, const std::vector<ColumnVector>& query_columns,
                              const EngineState& state, const SearchConfig& cfg);
SearchOutcome search(const Table& query, const EngineState& state, const SearchConfig& cfg);

}  // namespace unionsearch
