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

#include "unionsearch/serializer.hpp"

#include <algorithm>

#include "unionsearch/error.hpp"
#include "unionsearch/hashing.hpp"

namespace unionsearch {
namespace {

std::vector<TokenId> value_tokens(const std::string& normalized) {
  std::vector<TokenId> out;
  std::size_t start = 0;
  while (start <= normalized.size()) {
    std::size_t end = normalized.find(' ', start);
    if (end == std::string::npos) end = normalized.size();
    if (end > start) out.push_back(token_id(std::string_view(normalized).substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

}  // namespace

TokenId token_id(std::string_view token) {
  TokenId id = fnv1a64(token);
  return id == kClsToken ? 1 : id;
}

PriorityNoise seeded_noise(std::string_view table_id, std::uint64_t salt) {
  const std::uint64_t table_key = hash_combine(salt, fnv1a64(table_id));
  return [table_key](std::size_t column, std::string_view value) {
    std::uint64_t key = hash_combine(hash_combine(table_key, column), fnv1a64(value));
    SplitMixStream s(key);
    return 0.8 + 0.2 * s.uniform();
  };
}

PriorityNoise unit_noise() {
  return [](std::size_t, std::string_view) { return 1.0; };
}

PriorityWeights priority_weights(const Table& table, const PriorityNoise& noise) {
  PriorityWeights out;
  out.columns.reserve(table.column_count());
  for (const auto& column : table.columns) {
    std::vector<WeightedValue> ranked;
    for (auto& [value, tf] : column_value_counts(column)) {
      double h = noise(column.position, value);
      ranked.push_back({value, static_cast<double>(tf) / h});
    }
    std::sort(ranked.begin(), ranked.end(), [](const WeightedValue& a, const WeightedValue& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.value < b.value;
    });
    out.columns.push_back(std::move(ranked));
  }
  return out;
}

PriorityWeights priority_weights(const Table& table, std::uint64_t salt) {
  return priority_weights(table, seeded_noise(table.id, salt));
}

TokenSequence serialize(const Table& table, const PriorityWeights& weights, std::size_t budget) {
  if (weights.columns.size() != table.column_count())
    throw PreconditionError("serialize: weights do not match table columns");
  const std::size_t m = table.column_count();

  // Selected values per column, built round by round.
  std::vector<std::vector<TokenId>> segments(m);
  std::vector<bool> opened(m, false);
  std::size_t used = 0;
  std::size_t max_round = 0;
  for (const auto& c : weights.columns) max_round = std::max(max_round, c.size());

  bool stopped = false;
  for (std::size_t round = 0; round < std::max<std::size_t>(max_round, 1) && !stopped; ++round) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto& ranked = weights.columns[j];
      if (round > 0 && round >= ranked.size()) continue;
      std::vector<TokenId> item;
      if (round < ranked.size()) item = value_tokens(ranked[round].value);
      std::size_t cost = item.size() + (round == 0 ? 1 : 0);
      if (used + cost > budget) {
        stopped = true;
        break;
      }
      used += cost;
      if (round == 0) opened[j] = true;
      segments[j].insert(segments[j].end(), item.begin(), item.end());
    }
  }

  TokenSequence seq;
  for (std::size_t j = 0; j < m; ++j) {
    if (!opened[j]) continue;
    seq.cls_positions.push_back(seq.tokens.size());
    seq.source_columns.push_back(j);
    seq.tokens.push_back(kClsToken);
    seq.tokens.insert(seq.tokens.end(), segments[j].begin(), segments[j].end());
  }
  // Budget too small for even one [CLS]+value item: keep a bare delimiter so
  // the sequence is never empty.
  if (seq.tokens.empty() && m > 0 && budget >= 1) {
    seq.cls_positions.push_back(0);
    seq.source_columns.push_back(0);
    seq.tokens.push_back(kClsToken);
  }
  return seq;
}

TokenSequence serialize_table(const Table& table, const SerializerConfig& cfg) {
  PriorityNoise noise = cfg.deterministic_h ? unit_noise() : seeded_noise(table.id, cfg.salt);
  return serialize(table, priority_weights(table, noise), cfg.budget);
}

}  // namespace unionsearch
