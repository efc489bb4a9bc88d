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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "unionsearch/table.hpp"

namespace unionsearch {

// Token ids are 64-bit hashes of the token text; the encoder folds them into
// its bucket table. kClsToken marks the start of every column segment.
using TokenId = std::uint64_t;
inline constexpr TokenId kClsToken = 0;

TokenId token_id(std::string_view token);

struct TokenSequence {
  std::vector<TokenId> tokens;
  std::vector<std::size_t> cls_positions;  // one per emitted column, first is 0
  std::vector<std::size_t> source_columns;  // table column behind each segment

  std::size_t column_count() const { return cls_positions.size(); }
  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

struct WeightedValue {
  std::string value;  // normalized cell value
  double weight = 0.0;
};

struct PriorityWeights {
  std::vector<std::vector<WeightedValue>> columns;
};

// h(column, value) in [0.8, 1].
using PriorityNoise = std::function<double(std::size_t column, std::string_view value)>;

// Reproducible noise keyed by (salt, table id, column position, value).
PriorityNoise seeded_noise(std::string_view table_id, std::uint64_t salt);
// h == 1 everywhere; ranking then follows term frequency alone.
PriorityNoise unit_noise();

PriorityWeights priority_weights(const Table& table, const PriorityNoise& noise);
PriorityWeights priority_weights(const Table& table, std::uint64_t salt);

struct SerializerConfig {
  std::size_t budget = 256;
  bool deterministic_h = false;
  std::uint64_t salt = 0;
};

// Round-robin over columns in table order: round 0 takes [CLS] plus the top
// value of each column as one item, later rounds take the next value of each
// column. Emission stops at the first item that does not fit the budget.
TokenSequence serialize(const Table& table, const PriorityWeights& weights, std::size_t budget);

// priority_weights + serialize with the configured noise.
TokenSequence serialize_table(const Table& table, const SerializerConfig& cfg);

}  // namespace unionsearch
