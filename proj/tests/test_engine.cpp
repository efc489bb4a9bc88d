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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "unionsearch/engine.hpp"
#include "unionsearch/error.hpp"
#include "unionsearch/eval.hpp"
#include "unionsearch/persist.hpp"

using namespace unionsearch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("unionsearch_test_engine_" + name);
  fs::remove_all(p);
  return p;
}

EngineConfig small_config() {
  EngineConfig cfg;
  cfg.set("encoder.dim", "16");
  cfg.set("encoder.heads", "2");
  cfg.set("encoder.ffn_dim", "32");
  cfg.set("encoder.mlp_hidden", "32");
  cfg.set("encoder.out_dim", "16");
  cfg.set("rerank.dim", "24");
  return cfg;
}

}  // namespace

TEST_CASE("configuration keys round trip through text") {
  EngineConfig cfg;
  for (const auto& key : EngineConfig::keys()) CHECK_NOTHROW(cfg.get(key));
  cfg.set("train.tau", "0.05");
  cfg.set("encoder.positional", "true");
  cfg.set("index.mode", "hnsw");
  cfg.set("search.k", " 7 ");
  CHECK(cfg.train.temperature == 0.05);
  CHECK(cfg.encoder.positional);
  CHECK(cfg.index_mode == "hnsw");
  CHECK(cfg.search.k == 7);
  fs::path path = scratch("config.txt");
  cfg.save(path);
  EngineConfig back = EngineConfig::load(path);
  CHECK(back.entries() == cfg.entries());
  fs::remove(path);
}

TEST_CASE("bad configuration is reported") {
  EngineConfig cfg;
  CHECK_THROWS_AS(cfg.set("no.such.key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("search.k", "ten"), ConfigError);
  CHECK_THROWS_AS(cfg.set("encoder.positional", "maybe"), ConfigError);
  CHECK_THROWS_AS(cfg.set("index.mode", "ivf"), ConfigError);
  fs::path path = scratch("bad.txt");
  {
    std::ofstream f(path);
    f << "# comment\nsearch.k = 3  # trailing\nnot a pair\n";
  }
  CHECK_THROWS_AS(cfg.merge_file(path), ConfigError);
  CHECK(cfg.search.k == 3);
  fs::remove(path);
  CHECK_THROWS_AS(cfg.merge_file(path), IoError);
}

TEST_CASE("index mode resolution") {
  EngineConfig cfg;
  CHECK(cfg.resolve_index_mode(100) == IndexMode::kExact);
  CHECK(cfg.resolve_index_mode(1000000) == IndexMode::kHnsw);
  cfg.index_mode = "hnsw";
  CHECK(cfg.resolve_index_mode(100) == IndexMode::kHnsw);
}

TEST_CASE("parameter checkpoints restore float32 values exactly") {
  EncoderConfig ec = small_config().encoder;
  EncoderParams p = EncoderParams::init(ec);
  p.round_to_float();
  fs::path path = scratch("params.bin");
  save_params(path, p);
  EncoderParams back = load_params(path);
  CHECK(back.config == ec);
  auto a = tensors(std::as_const(p));
  auto b = tensors(std::as_const(back));
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].name == b[k].name);
    CHECK(std::equal(a[k].values.begin(), a[k].values.end(), b[k].values.begin(), b[k].values.end()));
  }
  fs::remove(path);
  fs::remove(ids_path_for(path));
}

TEST_CASE("embedding files round trip") {
  std::vector<TableEmbedding> e = {{"a", {0.6, 0.8}}, {"b,with comma", {1.0, 0.0}}};
  fs::path path = scratch("emb.bin");
  save_embeddings(path, to_embedding_set(e));
  EmbeddingSet back = load_embeddings(path);
  CHECK(back.ids == std::vector<std::string>{"a", "b,with comma"});
  CHECK(back.dim == 2);
  CHECK(back.values == std::vector<float>{0.6f, 0.8f, 1.0f, 0.0f});
  fs::remove(path);
  CHECK_THROWS_AS(load_embeddings(path), IoError);
}

TEST_CASE("a saved lake state answers queries like the live one") {
  SyntheticConfig sc;
  sc.clusters = 4;
  sc.tables_per_cluster = 4;
  SyntheticLake s = gen_synthetic_lake(sc);
  EngineConfig cfg = small_config();
  EncoderParams params = EncoderParams::init(cfg.encoder);
  params.round_to_float();
  EngineState live = build_engine(s.lake, params, cfg);
  fs::path dir = scratch("state");
  save_state(dir, live, cfg);
  for (const char* f : {"params.bin", "embeddings.bin", "embeddings.ids", "colvecs.bin", "colvecs.ids", "config.txt"})
    CHECK(fs::exists(dir / f));
  CHECK(fs::is_directory(dir / "index"));
  EngineConfig loaded_cfg;
  EngineState loaded = load_state(dir, &loaded_cfg);
  CHECK(loaded_cfg.entries() == cfg.entries());
  CHECK(loaded.index.size() == 16);
  for (const auto& [id, t] : s.lake) {
    SearchOutcome a = search(t, live, cfg.search);
    SearchOutcome b = search(t, loaded, cfg.search);
    REQUIRE(a.result.entries.size() == b.result.entries.size());
    for (std::size_t i = 0; i < a.result.entries.size(); ++i) {
      CHECK(a.result.entries[i].id == b.result.entries[i].id);
      CHECK(a.result.entries[i].table_score == b.result.entries[i].table_score);
      CHECK(a.result.entries[i].alignment == doctest::Approx(b.result.entries[i].alignment).epsilon(1e-6));
    }
  }
  fs::remove_all(dir);
  CHECK_THROWS_AS(load_state(dir), IoError);
}
