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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "unionsearch/engine.hpp"
#include "unionsearch/error.hpp"
#include "unionsearch/eval.hpp"
#include "unionsearch/search.hpp"

using namespace unionsearch;

namespace {

// Straight-line scan with 1-based positions.
std::size_t oracle_cutoff(const std::vector<double>& s, std::size_t k, double tau_abs, double tau_drop) {
  if (s.size() < k) return s.size();
  std::size_t cut = k;
  for (std::size_t i = k + 1; i <= s.size(); ++i) {
    bool abs_hit = s[i - 1] < tau_abs;
    bool drop_hit = s[i - 2] - s[i - 1] > tau_drop;
    if (abs_hit || drop_hit) return i - 1;
    cut = i;
  }
  return cut;
}

EngineConfig small_engine_config() {
  EngineConfig cfg;
  cfg.encoder.vocab_buckets = 4096;
  cfg.encoder.dim = 16;
  cfg.encoder.heads = 2;
  cfg.encoder.ffn_dim = 32;
  cfg.encoder.mlp_hidden = 32;
  cfg.encoder.out_dim = 16;
  cfg.words.dim = 32;
  cfg.index_mode = "exact";
  return cfg;
}

}  // namespace

TEST_CASE("cutoff stops on the absolute threshold") {
  std::vector<double> s = {0.9, 0.85, 0.8, 0.4, 0.3, 0.2};
  CHECK(adaptive_cutoff(s, 2, 0.5, 0.2) == 3);
}

TEST_CASE("cutoff stops on a large drop") {
  std::vector<double> s = {0.9, 0.85, 0.5, 0.45};
  CHECK(adaptive_cutoff(s, 2, 0.5, 0.2) == 2);
}

TEST_CASE("cutoff without a trigger keeps the whole list") {
  std::vector<double> s = {0.9, 0.85, 0.8, 0.75, 0.7};
  CHECK(adaptive_cutoff(s, 2, 0.5, 0.2) == 5);
  CHECK(adaptive_cutoff(std::vector<double>{0.1}, 3, 0.5, 0.2) == 1);
  CHECK(adaptive_cutoff(std::vector<double>{0.9, 0.1}, 2, 0.5, 0.2) == 2);
}

TEST_CASE("cutoff matches a straight-line scan on random lists") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> s(1 + rng() % 30);
    for (double& x : s) x = std::round(u(rng) * 20.0) / 20.0;
    std::sort(s.rbegin(), s.rend());
    std::size_t k = 1 + rng() % 12;
    double tau_abs = std::round(u(rng) * 10.0) / 10.0, tau_drop = 0.05 + std::round(u(rng) * 6.0) / 20.0;
    std::size_t cut = adaptive_cutoff(s, k, tau_abs, tau_drop);
    CHECK(cut == oracle_cutoff(s, k, tau_abs, tau_drop));
    CHECK(cut >= std::min(k, s.size()));
    CHECK(cut <= s.size());
    CHECK(adaptive_cutoff(s, k, 0.0, std::numeric_limits<double>::infinity()) == s.size());
  }
}

TEST_CASE("low table scores are pruned before reranking") {
  const double b = 0.805, c = 0.233;
  std::vector<TableEmbedding> lake = {{"B", {b, std::sqrt(1 - b * b)}}, {"C", {c, -std::sqrt(1 - c * c)}}};
  EngineState state;
  state.index = EmbeddingIndex::build(lake, IndexMode::kExact);
  state.columns.dim = 2;
  state.columns.tables["B"] = {{{1, 0}, false}};
  state.columns.tables["C"] = {{{1, 0}, false}};
  SearchConfig cfg;
  cfg.k = 1;
  std::vector<double> q = {1, 0};
  SearchOutcome out = search_embedded(q, {{{1, 0}, false}}, state, cfg);
  REQUIRE(out.pool.init.size() == 2);
  CHECK(out.pool.cutoff == 1);
  REQUIRE(out.result.entries.size() == 1);
  CHECK(out.result.entries[0].id == "B");
  CHECK(out.result.entries[0].table_score == doctest::Approx(b).epsilon(1e-6));
  CHECK(out.result.entries[0].alignment == doctest::Approx(1.0));
  CHECK(out.result.entries[0].score == doctest::Approx(b + 1.0).epsilon(1e-6));

  cfg.tau_abs = 0.0;
  cfg.tau_drop = 1.0;
  cfg.k = 2;
  SearchOutcome both = search_embedded(q, {{{1, 0}, false}}, state, cfg);
  CHECK(both.pool.cutoff == 2);
  CHECK(both.result.entries.size() == 2);
}

TEST_CASE("search on a synthetic lake") {
  SyntheticConfig sc;
  sc.clusters = 25;
  sc.tables_per_cluster = 8;
  SyntheticLake synth = gen_synthetic_lake(sc);
  REQUIRE(synth.lake.size() == 200);
  EngineConfig cfg = small_engine_config();
  EngineState state = build_engine(synth.lake, EncoderParams::init(cfg.encoder), cfg);

  SUBCASE("a lake table finds itself first") {
    for (const std::string id : {"c000_t00", "c013_t05", "c024_t07"}) {
      SearchOutcome out = search(synth.lake.at(id), state, cfg.search);
      REQUIRE(!out.result.entries.empty());
      CHECK(out.result.entries[0].id == id);
      CHECK(out.result.entries[0].table_score == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(out.result.entries[0].alignment == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(out.result.entries[0].score == doctest::Approx(2.0).epsilon(1e-6));
    }
  }

  SUBCASE("results equal a full-scan oracle") {
    const SerializerConfig ser = cfg.offline_serializer();
    for (std::size_t qi = 0; qi < 200; qi += 9) {
      const Table& query = std::next(synth.lake.begin(), static_cast<std::ptrdiff_t>(qi))->second;
      Table q = query.select("query", {0, 2, 4, 6, 8}, {0, 1});
      for (auto [k, tau_abs, tau_drop] : {std::tuple{5ul, 0.5, 0.2}, std::tuple{10ul, 0.0, 1.0}, std::tuple{3ul, 0.7, 0.05}}) {
        SearchConfig sc{k, tau_abs, tau_drop, 3};
        SearchOutcome got = search(q, state, sc);

        TableEmbedding qe = embed_table(q, state.params, ser);
        const EmbeddingSet& set = state.index.embeddings();
        std::vector<ScoredId> scan;
        for (std::size_t i = 0; i < set.size(); ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < set.dim; ++j) s += qe.vec[j] * static_cast<double>(set.values[i * set.dim + j]);
          scan.push_back({set.ids[i], std::clamp(s, 0.0, 1.0)});
        }
        std::sort(scan.begin(), scan.end(), [](const ScoredId& a, const ScoredId& b) {
          return a.score != b.score ? a.score > b.score : a.id < b.id;
        });
        scan.resize(3 * k);
        std::vector<double> scores;
        for (const auto& s : scan) scores.push_back(s.score);
        std::size_t cut = oracle_cutoff(scores, k, tau_abs, tau_drop);
        CHECK(got.pool.cutoff == cut);
        CHECK(std::equal(scan.begin(), scan.end(), got.pool.init.begin(), got.pool.init.end()));

        auto qcols = column_vectors(q, state.words);
        std::vector<ResultEntry> want;
        for (std::size_t i = 0; i < cut; ++i) {
          double mu_a = alignment_score(qcols, state.columns.at(scan[i].id));
          want.push_back({scan[i].id, scan[i].score, mu_a, scan[i].score + mu_a});
        }
        std::sort(want.begin(), want.end(), [](const ResultEntry& a, const ResultEntry& b) {
          return a.score != b.score ? a.score > b.score : a.id < b.id;
        });
        want.resize(std::min(k, want.size()));
        REQUIRE(got.result.entries.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
          CHECK(got.result.entries[i].id == want[i].id);
          CHECK(got.result.entries[i].score == want[i].score);
        }
      }
    }
  }

  SUBCASE("a degenerate cutoff keeps the fixed 3k pool") {
    SearchConfig fixed{10, 0.0, std::numeric_limits<double>::infinity(), 3};
    SearchOutcome out = search(synth.lake.at("c001_t01"), state, fixed);
    CHECK(out.pool.init.size() == 30);
    CHECK(out.pool.cutoff == 30);
    CHECK(out.result.entries.size() == 10);
  }

  SUBCASE("search is deterministic") {
    SearchOutcome a = search(synth.lake.at("c002_t03"), state, cfg.search);
    SearchOutcome b = search(synth.lake.at("c002_t03"), state, cfg.search);
    REQUIRE(a.result.entries.size() == b.result.entries.size());
    for (std::size_t i = 0; i < a.result.entries.size(); ++i) {
      CHECK(a.result.entries[i].id == b.result.entries[i].id);
      CHECK(a.result.entries[i].score == b.result.entries[i].score);
    }
  }

  SUBCASE("invalid queries") {
    CHECK_THROWS_AS(search(Table{}, state, cfg.search), BadQuery);
    EngineState empty;
    CHECK_THROWS_AS(search(synth.lake.at("c000_t00"), empty, cfg.search), EmptyIndex);
    SearchConfig bad;
    bad.k = 0;
    CHECK_THROWS_AS(search(synth.lake.at("c000_t00"), state, bad), ConfigError);
  }
}
