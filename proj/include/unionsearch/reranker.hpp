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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "unionsearch/table.hpp"

namespace unionsearch {

struct WordVectorConfig {
  std::size_t dim = 100;
  std::size_t buckets = 2000000;
  std::size_t min_n = 3;
  std::size_t max_n = 6;
  std::uint64_t seed = 1234;
};

// Subword word vectors. Without a vocabulary every word is the mean of the
// vectors of its boundary-marked character n-grams, each drawn from a
// fixed-seed random bucket table that is generated on demand. A loaded
// word2vec-format vocabulary takes precedence; out-of-vocabulary words fall
// back to n-grams.
class WordVectorProvider {
 public:
  explicit WordVectorProvider(WordVectorConfig cfg = {});

  // Throws IoError / ConfigError. The file dimension replaces cfg.dim.
  static WordVectorProvider from_word2vec(const std::filesystem::path& path, WordVectorConfig cfg = {});

  std::vector<double> word_vector(std::string_view word) const;
  // Mean word vector over the tokens of a cell; zero for token-free cells.
  std::vector<double> value_vector(std::string_view value) const;

  std::size_t dim() const { return cfg_.dim; }
  bool pretrained() const { return !vocab_.empty(); }
  const WordVectorConfig& config() const { return cfg_; }

  // Bucket ids of the character n-grams of "<word>".
  std::vector<std::uint32_t> ngram_buckets(std::string_view word) const;

 private:
  void add_bucket_vector(std::uint32_t bucket, std::vector<double>& acc) const;

  WordVectorConfig cfg_;
  std::unordered_map<std::string, std::vector<double>> vocab_;
};

// Frequency-weighted mean of the value vectors of a column's distinct
// non-empty values. `empty` is set when there are none (vec is then zero).
struct ColumnVector {
  std::vector<double> vec;
  bool empty = false;
};

ColumnVector column_vector(const Column& column, const WordVectorProvider& provider);
std::vector<ColumnVector> column_vectors(const Table& table, const WordVectorProvider& provider);

// Cosine; 0 when either side is a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

// Average over non-empty query columns of the best clamped cosine against any
// candidate column. 0 when the candidate has no columns or the query has no
// non-empty column.
double alignment_score(const std::vector<ColumnVector>& query, const std::vector<ColumnVector>& candidate);
double alignment_score(const Table& query, const Table& candidate, const WordVectorProvider& provider);

inline double final_score(double table_score, double alignment) { return table_score + alignment; }

// Precomputed column vectors for a lake, persisted as float rows with ids
// "tableid#colpos".
struct ColumnVectorStore {
  std::size_t dim = 0;
  std::map<std::string, std::vector<ColumnVector>> tables;

  void save(const std::filesystem::path& bin) const;
  static ColumnVectorStore load(const std::filesystem::path& bin);
  const std::vector<ColumnVector>& at(const std::string& table_id) const;
};

ColumnVectorStore build_column_store(const DataLake& lake, const WordVectorProvider& provider);

}  // namespace unionsearch
