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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "unionsearch/encoder.hpp"

namespace unionsearch {

// On-disk layout shared by embeddings, column vectors and checkpoints: one
// line of JSON ({"dim", "count", "ids_file", ...}) followed by count rows of
// dim little-endian float32 values. Ids, when present, live in a sidecar
// newline-delimited text file next to the binary.
struct FloatRows {
  nlohmann::json header;
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<float> values;  // count * dim, row-major

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

void write_float_rows(const std::filesystem::path& path, nlohmann::json header, std::size_t dim,
                      std::span<const float> values);
FloatRows read_float_rows(const std::filesystem::path& path);

std::filesystem::path ids_path_for(const std::filesystem::path& bin);

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::size_t size() const { return ids.size(); }
};

EmbeddingSet to_embedding_set(const std::vector<TableEmbedding>& embeddings);
void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_params(const std::filesystem::path& path);

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace unionsearch
