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

#include "unionsearch/search.hpp"

#include <algorithm>
#include <cmath>

#include "unionsearch/error.hpp"

namespace unionsearch {

void SearchConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(tau_abs >= 0.0 && tau_abs <= 1.0)) throw ConfigError("tau_abs must be in [0, 1]");
  if (!(tau_drop > 0.0)) throw ConfigError("tau_drop must be > 0");
  if (pool_multiplier < 1) throw ConfigError("pool multiplier must be >= 1");
}

std::size_t adaptive_cutoff(std::span<const double> scores, std::size_t k, double tau_abs, double tau_drop) {
  const std::size_t n = scores.size();
  if (n <= k) return n;
  // scores[i - 1] is the i-th entry.
  for (std::size_t i = k + 1; i <= n; ++i) {
    if (scores[i - 1] < tau_abs || scores[i - 2] - scores[i - 1] > tau_drop) return i - 1;
  }
  return n;
}

CandidatePool retrieve_candidates(const EmbeddingIndex& index, std::span<const double> query, const SearchConfig& cfg) {
  cfg.validate();
  CandidatePool pool;
  pool.init = index.topk(query, cfg.k * cfg.pool_multiplier);
  std::vector<double> scores;
  scores.reserve(pool.init.size());
  for (const auto& s : pool.init) scores.push_back(s.score);
  pool.cutoff = adaptive_cutoff(scores, cfg.k, cfg.tau_abs, cfg.tau_drop);
  return pool;
}

QueryResult rerank(const CandidatePool& pool, const std::vector<ColumnVector>& query_columns,
                   const ColumnVectorStore& store, std::size_t k) {
  QueryResult r;
  for (const auto& cand : pool.selected()) {
    double align = alignment_score(query_columns, store.at(cand.id));
    r.entries.push_back({cand.id, cand.score, align, final_score(cand.score, align)});
  }
  std::sort(r.entries.begin(), r.entries.end(), [](const ResultEntry& a, const ResultEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (r.entries.size() > k) r.entries.resize(k);
  return r;
}

TableEmbedding embed_table(const Table& table, const EncoderParams& params, const SerializerConfig& serializer) {
  return encode(serialize_table(table, serializer), params, table.id).embedding;
}

std::vector<TableEmbedding> embed_lake(const DataLake& lake, const EncoderParams& params,
                                       const SerializerConfig& serializer) {
  std::vector<TableEmbedding> out;
  out.reserve(lake.size());
  for (const auto& [id, t] : lake) out.push_back(embed_table(t, params, serializer));
  return out;
}

SearchOutcome search_embedded(std::span<const double> query_embedding, const std::vector<ColumnVector>& query_columns,
                              const EngineState& state, const SearchConfig& cfg) {
  SearchOutcome out;
  out.pool = retrieve_candidates(state.index, query_embedding, cfg);
  out.result = rerank(out.pool, query_columns, state.columns, cfg.k);
  out.query_embedding.vec.assign(query_embedding.begin(), query_embedding.end());
  return out;
}

SearchOutcome search(const Table& query, const EngineState& state, const SearchConfig& cfg) {
  if (query.column_count() == 0) throw BadQuery("query table has no columns");
  if (state.index.size() == 0) throw EmptyIndex("lake index is empty");
  TableEmbedding q = embed_table(query, state.params, state.serializer);
  SearchOutcome out = search_embedded(q.vec, column_vectors(query, state.words), state, cfg);
  out.query_embedding = std::move(q);
  return out;
}

}  // namespace unionsearch
