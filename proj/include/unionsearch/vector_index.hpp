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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "unionsearch/persist.hpp"

namespace unionsearch {

enum class IndexMode { kExact, kHnsw };

IndexMode parse_index_mode(const std::string& s);
std::string to_string(IndexMode mode);

struct IndexParams {
  std::size_t m = 16;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 64;
  std::uint64_t seed = 100;
};

struct ScoredId {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredId&) const = default;
};

// Graph over row indices; layer 0 holds every node.
struct HnswGraph {
  std::size_t m = 16;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 64;
  std::size_t entry = 0;
  std::size_t max_level = 0;
  std::vector<std::size_t> levels;
  std::vector<std::vector<std::vector<std::uint32_t>>> links;  // node -> layer -> neighbors
};

// Cosine index over unit-norm float rows. Scores are clamped to [0, 1] and
// ties are broken by id.
class EmbeddingIndex {
 public:
  static EmbeddingIndex build(EmbeddingSet embeddings, IndexMode mode, const IndexParams& params = {});
  static EmbeddingIndex build(const std::vector<TableEmbedding>& embeddings, IndexMode mode,
                              const IndexParams& params = {});

  std::vector<ScoredId> topk(std::span<const double> query, std::size_t k) const;

  void save(const std::filesystem::path& dir) const;
  static EmbeddingIndex load(const std::filesystem::path& dir);

  IndexMode mode() const { return mode_; }
  std::size_t size() const { return data_.size(); }
  std::size_t dim() const { return data_.dim; }
  const EmbeddingSet& embeddings() const { return data_; }
  const HnswGraph* graph() const { return graph_.get(); }

 private:
  std::vector<ScoredId> exact_topk(std::span<const double> query, std::size_t k) const;
  std::vector<ScoredId> hnsw_topk(std::span<const double> query, std::size_t k) const;

  EmbeddingSet data_;
  IndexMode mode_ = IndexMode::kExact;
  std::shared_ptr<const HnswGraph> graph_;
};

// Dot product of a double query and a float row, accumulated in double in
// index order. Every scorer in the library goes through this.
double dot(std::span<const double> a, std::span<const float> b);

// Mode used when none is requested: exact below 50k vectors.
IndexMode default_index_mode(std::size_t n);

}  // namespace unionsearch
