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

#include "unionsearch/engine.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "unionsearch/error.hpp"
#include "unionsearch/persist.hpp"

namespace unionsearch {
namespace {

struct Field {
  std::function<void(EngineConfig&, const std::string&)> set;
  std::function<std::string(const EngineConfig&)> get;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": " + v);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  if (!(in >> out) || !(in >> std::ws).eof()) throw ConfigError("bad value for " + key + ": " + v);
  if constexpr (std::is_unsigned_v<T>) {
    if (!v.empty() && v[0] == '-') throw ConfigError("negative value for " + key);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

#define US_SIZE(key, expr)                                                                                  \
  {                                                                                                         \
    key, Field {                                                                                            \
      [](EngineConfig& c, const std::string& v) { c.expr = parse_number<std::size_t>(key, v); },            \
          [](const EngineConfig& c) { return fmt_int(c.expr); }                                             \
    }                                                                                                       \
  }
#define US_U64(key, expr)                                                                                   \
  {                                                                                                         \
    key, Field {                                                                                            \
      [](EngineConfig& c, const std::string& v) { c.expr = parse_number<std::uint64_t>(key, v); },          \
          [](const EngineConfig& c) { return fmt_int(c.expr); }                                             \
    }                                                                                                       \
  }
#define US_DOUBLE(key, expr)                                                                                \
  {                                                                                                         \
    key, Field {                                                                                            \
      [](EngineConfig& c, const std::string& v) { c.expr = parse_number<double>(key, v); },                 \
          [](const EngineConfig& c) { return fmt(c.expr); }                                                 \
    }                                                                                                       \
  }
#define US_BOOL(key, expr)                                                                                  \
  {                                                                                                         \
    key, Field {                                                                                            \
      [](EngineConfig& c, const std::string& v) { c.expr = parse_bool(key, v); },                           \
          [](const EngineConfig& c) { return std::string(c.expr ? "true" : "false"); }                    \
    }                                                                                                       \
  }
#define US_STRING(key, expr)                                                                                \
  {                                                                                                         \
    key, Field {                                                                                            \
      [](EngineConfig& c, const std::string& v) { c.expr = v; }, [](const EngineConfig& c) { return c.expr; } \
    }                                                                                                       \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      US_BOOL("ingest.has_header", ingest.has_header),
      US_SIZE("ingest.max_cell_chars", ingest.max_cell_chars),
      US_SIZE("serializer.budget", serializer.budget),
      US_BOOL("serializer.deterministic_h", serializer.deterministic_h),
      US_SIZE("encoder.vocab_buckets", encoder.vocab_buckets),
      US_SIZE("encoder.dim", encoder.dim),
      US_SIZE("encoder.layers", encoder.layers),
      US_SIZE("encoder.heads", encoder.heads),
      US_SIZE("encoder.ffn_dim", encoder.ffn_dim),
      US_SIZE("encoder.mlp_hidden", encoder.mlp_hidden),
      US_SIZE("encoder.out_dim", encoder.out_dim),
      US_BOOL("encoder.positional", encoder.positional),
      US_U64("encoder.seed", encoder.seed),
      US_SIZE("train.batch", train.batch_size),
      US_SIZE("train.epochs", train.epochs),
      US_DOUBLE("train.lr", train.learning_rate),
      US_DOUBLE("train.tau", train.temperature),
      US_DOUBLE("train.gamma", train.latent_threshold),
      US_U64("train.seed", train.seed),
      US_BOOL("train.literal_denominator", train.literal_denominator),
      US_DOUBLE("train.row_fraction_min", train.pairs.row_fraction_min),
      US_DOUBLE("train.row_fraction_max", train.pairs.row_fraction_max),
      US_DOUBLE("train.column_fraction_min", train.pairs.column_fraction_min),
      US_DOUBLE("train.column_fraction_max", train.pairs.column_fraction_max),
      US_STRING("index.mode", index_mode),
      US_SIZE("index.m", index.m),
      US_SIZE("index.ef_construction", index.ef_construction),
      US_SIZE("index.ef_search", index.ef_search),
      US_U64("index.seed", index.seed),
      US_SIZE("rerank.dim", words.dim),
      US_SIZE("rerank.buckets", words.buckets),
      US_SIZE("rerank.min_n", words.min_n),
      US_SIZE("rerank.max_n", words.max_n),
      US_U64("rerank.seed", words.seed),
      US_STRING("rerank.vectors_file", word_vectors_file),
      US_SIZE("search.k", search.k),
      US_DOUBLE("search.tau_abs", search.tau_abs),
      US_DOUBLE("search.tau_drop", search.tau_drop),
      US_SIZE("search.pool_multiplier", search.pool_multiplier),
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  throw ConfigError("unknown config key: " + key);
}

}  // namespace

void EngineConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, trim(value));
  if (key == "index.mode" && index_mode != "auto") parse_index_mode(index_mode);
}

std::string EngineConfig::get(const std::string& key) const { return field(key).get(*this); }

std::vector<std::pair<std::string, std::string>> EngineConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, f] : fields()) out.emplace_back(k, f.get(*this));
  return out;
}

std::vector<std::string> EngineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : fields()) out.push_back(k);
  return out;
}

void EngineConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
  EngineConfig cfg;
  cfg.merge_file(path);
  return cfg;
}

void EngineConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : entries()) out << k << " = " << v << '\n';
}

SerializerConfig EngineConfig::offline_serializer() const {
  SerializerConfig s = serializer;
  s.salt = 0;
  return s;
}

IndexMode EngineConfig::resolve_index_mode(std::size_t n) const {
  return index_mode == "auto" ? default_index_mode(n) : parse_index_mode(index_mode);
}

WordVectorProvider make_word_vectors(const EngineConfig& cfg) {
  if (!cfg.word_vectors_file.empty()) return WordVectorProvider::from_word2vec(cfg.word_vectors_file, cfg.words);
  return WordVectorProvider(cfg.words);
}

EngineState build_engine(const DataLake& lake, EncoderParams params, const EngineConfig& cfg) {
  if (lake.empty()) throw EmptyIndex("lake is empty");
  EngineState state;
  state.serializer = cfg.offline_serializer();
  state.words = make_word_vectors(cfg);
  auto embeddings = embed_lake(lake, params, state.serializer);
  state.index = EmbeddingIndex::build(embeddings, cfg.resolve_index_mode(lake.size()), cfg.index);
  state.columns = build_column_store(lake, state.words);
  state.params = std::move(params);
  return state;
}

void save_state(const std::filesystem::path& dir, const EngineState& state, const EngineConfig& cfg,
                const std::vector<TableEmbedding>* embeddings) {
  std::filesystem::create_directories(dir);
  save_params(dir / "params.bin", state.params);
  if (embeddings) {
    save_embeddings(dir / "embeddings.bin", to_embedding_set(*embeddings));
  } else {
    save_embeddings(dir / "embeddings.bin", state.index.embeddings());
  }
  state.index.save(dir / "index");
  state.columns.save(dir / "colvecs.bin");
  cfg.save(dir / "config.txt");
}

EngineState load_state(const std::filesystem::path& dir, EngineConfig* cfg_out) {
  if (!std::filesystem::is_directory(dir)) throw IoError("lake state not found: " + dir.string());
  EngineConfig cfg;
  if (std::filesystem::exists(dir / "config.txt")) cfg.merge_file(dir / "config.txt");
  EngineState state;
  state.params = load_params(dir / "params.bin");
  state.serializer = cfg.offline_serializer();
  state.index = EmbeddingIndex::load(dir / "index");
  state.columns = ColumnVectorStore::load(dir / "colvecs.bin");
  state.words = make_word_vectors(cfg);
  if (cfg_out) *cfg_out = cfg;
  return state;
}

}  // namespace unionsearch
