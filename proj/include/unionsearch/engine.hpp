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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "unionsearch/search.hpp"
#include "unionsearch/trainer.hpp"

namespace unionsearch {

// Every tunable of the pipeline as flat `section.key = value` entries.
// Unknown keys are rejected.
struct EngineConfig {
  IngestOptions ingest;
  SerializerConfig serializer;
  EncoderConfig encoder;
  TrainConfig train;
  std::string index_mode = "auto";  // auto | exact | hnsw
  IndexParams index;
  WordVectorConfig words;
  std::string word_vectors_file;  // word2vec text file, empty for hashed n-grams
  SearchConfig search;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> entries() const;
  static std::vector<std::string> keys();

  // Parses `key = value` lines; '#' starts a comment.
  void merge_file(const std::filesystem::path& path);
  static EngineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Serializer as used for lake and query tables (fixed noise salt).
  SerializerConfig offline_serializer() const;
  IndexMode resolve_index_mode(std::size_t n) const;
};

WordVectorProvider make_word_vectors(const EngineConfig& cfg);

// Embeds and indexes every lake table and precomputes its column vectors.
EngineState build_engine(const DataLake& lake, EncoderParams params, const EngineConfig& cfg);

// Lake-state directory: params.bin, embeddings.bin(+ids), index/,
// colvecs.bin(+ids), config.txt.
void save_state(const std::filesystem::path& dir, const EngineState& state, const EngineConfig& cfg,
                const std::vector<TableEmbedding>* embeddings = nullptr);
EngineState load_state(const std::filesystem::path& dir, EngineConfig* cfg_out = nullptr);

}  // namespace unionsearch
