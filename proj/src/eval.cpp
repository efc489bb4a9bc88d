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

#include "unionsearch/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_map>

#include "unionsearch/error.hpp"

namespace unionsearch {
namespace {

std::size_t hits_in_prefix(std::span<const std::string> results, const std::set<std::string>& gt, std::size_t n) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(n, results.size()); ++i) hits += gt.count(results[i]);
  return hits;
}

void require_valid(const std::set<std::string>& gt, std::size_t k) {
  if (gt.empty()) throw PreconditionError("ground truth set is empty");
  if (k == 0) throw PreconditionError("k must be >= 1");
}

const char* const kSyllableOnsets[] = {"b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s",
                                       "t", "v", "w", "z", "br", "ch", "dr", "gl", "kr", "pl", "sh", "st", "tr"};
const char* const kSyllableVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea"};

std::string random_word(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> onset(0, std::size(kSyllableOnsets) - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, std::size(kSyllableVowels) - 1);
  std::string w;
  for (int s = syllables(rng); s > 0; --s) {
    w += kSyllableOnsets[onset(rng)];
    w += kSyllableVowels[vowel(rng)];
  }
  return w;
}

}  // namespace

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  GroundTruth gt;
  bool first = true;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("bad ground truth line: " + line);
    std::string q = line.substr(0, comma), c = line.substr(comma + 1);
    if (first && q == "query_id" && c == "candidate_id") {
      first = false;
      continue;
    }
    first = false;
    gt[q].insert(c);
  }
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  std::vector<std::string> lines{"query_id,candidate_id"};
  for (const auto& [q, cands] : gt)
    for (const auto& c : cands) lines.push_back(q + "," + c);
  write_lines(path, lines);
}

PrecisionRecall precision_recall(std::span<const std::string> results, const std::set<std::string>& gt, std::size_t k) {
  require_valid(gt, k);
  const auto hits = static_cast<double>(hits_in_prefix(results, gt, k));
  return {hits / static_cast<double>(k), hits / static_cast<double>(gt.size())};
}

double map_at_k(std::span<const std::string> results, const std::set<std::string>& gt, std::size_t k) {
  require_valid(gt, k);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 1; i <= k; ++i) {
    if (i <= results.size() && gt.count(results[i - 1])) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i);
  }
  return sum / static_cast<double>(k);
}

double recall_upper_bound(std::size_t k, std::size_t gt_size) {
  if (gt_size == 0) throw PreconditionError("ground truth set is empty");
  return static_cast<double>(std::min(k, gt_size)) / static_cast<double>(gt_size);
}

QueryMetrics score_query(const std::string& query_id, std::span<const std::string> results,
                         std::span<const ScoredId> pool, const std::set<std::string>& gt, std::size_t k) {
  QueryMetrics m;
  m.query_id = query_id;
  auto pr = precision_recall(results, gt, k);
  m.precision = pr.precision;
  m.recall = pr.recall;
  m.map = map_at_k(results, gt, k);
  m.recall_upper_bound = recall_upper_bound(k, gt.size());
  m.relative_recall = m.recall / m.recall_upper_bound;
  m.pool_size = pool.size();
  std::size_t good = 0;
  for (const auto& p : pool) good += gt.count(p.id);
  m.pool_fraction = pool.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(pool.size());
  return m;
}

void finalize(MetricReport& r) {
  r.mean_map = r.mean_precision = r.mean_recall = r.mean_relative_recall = 0.0;
  r.mean_pool_size = r.mean_pool_fraction = 0.0;
  if (r.queries.empty()) return;
  for (const auto& q : r.queries) {
    r.mean_map += q.map;
    r.mean_precision += q.precision;
    r.mean_recall += q.recall;
    r.mean_relative_recall += q.relative_recall;
    r.mean_pool_size += static_cast<double>(q.pool_size);
    r.mean_pool_fraction += q.pool_fraction;
  }
  const auto n = static_cast<double>(r.queries.size());
  r.mean_map /= n;
  r.mean_precision /= n;
  r.mean_recall /= n;
  r.mean_relative_recall /= n;
  r.mean_pool_size /= n;
  r.mean_pool_fraction /= n;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : queries) {
    per_query.push_back({{"query_id", q.query_id},
                         {"map", q.map},
                         {"precision", q.precision},
                         {"recall", q.recall},
                         {"recall_upper_bound", q.recall_upper_bound},
                         {"relative_recall", q.relative_recall},
                         {"pool_size", q.pool_size},
                         {"pool_fraction", q.pool_fraction}});
  }
  return {{"k", k},
          {"queries", queries.size()},
          {"map", mean_map},
          {"precision", mean_precision},
          {"recall", mean_recall},
          {"relative_recall", mean_relative_recall},
          {"mean_pool_size", mean_pool_size},
          {"mean_pool_fraction", mean_pool_fraction},
          {"skipped", skipped},
          {"per_query", per_query}};
}

std::string MetricReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "queries          " << queries.size() << " (skipped " << skipped.size() << ")\n";
  out << "MAP@" << k << std::string(k < 10 ? 12 : 11, ' ') << mean_map << '\n';
  out << "P@" << k << std::string(k < 10 ? 14 : 13, ' ') << mean_precision << '\n';
  out << "R@" << k << std::string(k < 10 ? 14 : 13, ' ') << mean_recall << '\n';
  out << "R@k/R_ub@k       " << mean_relative_recall << '\n';
  out << "pool size        " << std::setprecision(2) << mean_pool_size << " (" << std::setprecision(1)
      << 100.0 * mean_pool_fraction << "% unionable)\n";
  return out.str();
}

SyntheticLake gen_synthetic_lake(const SyntheticConfig& cfg) {
  if (cfg.clusters < 2) throw PreconditionError("synthetic lake needs at least two clusters");
  if (cfg.tables_per_cluster < 1 || cfg.rows < 1 || cfg.cols < 1 || cfg.pool_size < 1)
    throw PreconditionError("synthetic lake sizes must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::unordered_map<std::string, std::size_t> owner;  // token -> cluster

  auto fresh_word = [&](std::size_t cluster) {
    for (;;) {
      std::string w = random_word(rng);
      if (owner.emplace(w, cluster).second) return w;
    }
  };

  // pools[c][j] = values of column j in cluster c
  std::vector<std::vector<std::vector<std::string>>> pools(cfg.clusters);
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    pools[c].resize(cfg.cols);
    for (std::size_t j = 0; j < cfg.cols; ++j) {
      // Multi-word values share a per-column head word, like "north route".
      std::string head = fresh_word(c);
      for (std::size_t v = 0; v < cfg.pool_size; ++v) {
        std::string value = fresh_word(c);
        if (v % 3 == 2) value = head + " " + value;
        pools[c][j].push_back(std::move(value));
      }
    }
  }

  auto add_typo = [&](std::string value, std::size_t cluster) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      std::string out = value;
      std::uniform_int_distribution<std::size_t> pos(0, out.size() - 1);
      std::size_t p = pos(rng);
      if (out[p] == ' ') continue;
      out[p] = static_cast<char>('a' + std::uniform_int_distribution<int>(0, 25)(rng));
      bool clash = false;
      for (const auto& tok : tokenize_value(out)) {
        auto it = owner.find(tok);
        if (it != owner.end() && it->second != cluster) clash = true;
      }
      if (clash) continue;
      for (const auto& tok : tokenize_value(out)) owner.emplace(tok, cluster);
      return out;
    }
    return value;
  };

  SyntheticLake out;
  std::bernoulli_distribution typo(cfg.typo_rate);
  std::bernoulli_distribution drop(cfg.column_dropout);
  std::vector<std::vector<std::string>> members(cfg.clusters);
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    for (std::size_t t = 0; t < cfg.tables_per_cluster; ++t) {
      char id[32];
      std::snprintf(id, sizeof id, "c%03zu_t%02zu", c, t);

      std::vector<std::size_t> kept;
      for (std::size_t j = 0; j < cfg.cols; ++j)
        if (!drop(rng)) kept.push_back(j);
      const std::size_t min_cols = std::min<std::size_t>(2, cfg.cols);
      for (std::size_t j = 0; kept.size() < min_cols; ++j)
        if (std::find(kept.begin(), kept.end(), j) == kept.end()) kept.push_back(j);
      std::shuffle(kept.begin(), kept.end(), rng);

      std::vector<std::vector<std::string>> columns;
      for (std::size_t j : kept) {
        std::vector<std::string> pool = pools[c][j];
        std::shuffle(pool.begin(), pool.end(), rng);
        auto share = static_cast<std::size_t>(std::ceil(cfg.pool_share * static_cast<double>(pool.size())));
        pool.resize(std::clamp<std::size_t>(share, 1, pool.size()));
        // Skewed draw so term frequencies differ inside a column.
        std::vector<double> weights(pool.size());
        for (std::size_t r = 0; r < pool.size(); ++r) weights[r] = 1.0 / static_cast<double>(r + 1);
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        std::vector<std::string> cells;
        for (std::size_t r = 0; r < cfg.rows; ++r) {
          std::string v = pool[pick(rng)];
          if (typo(rng)) v = add_typo(std::move(v), c);
          cells.push_back(std::move(v));
        }
        columns.push_back(std::move(cells));
      }
      out.lake.add(Table::from_columns(id, std::move(columns)));
      out.cluster_of[id] = c;
      members[c].push_back(id);
    }
  }
  for (const auto& group : members)
    for (const auto& q : group)
      for (const auto& other : group)
        if (other != q) out.ground_truth[q].insert(other);
  return out;
}

DataLake hold_out_queries(SyntheticLake& synth, std::size_t per_cluster) {
  std::map<std::size_t, std::size_t> taken;
  std::vector<std::string> query_ids;
  for (const auto& [id, cluster] : synth.cluster_of) {
    if (taken[cluster] < per_cluster && synth.lake.contains(id)) {
      ++taken[cluster];
      query_ids.push_back(id);
    }
  }
  DataLake queries;
  for (const auto& id : query_ids) queries.add(synth.lake.extract(id));
  for (auto& [q, cands] : synth.ground_truth)
    for (auto it = cands.begin(); it != cands.end();) it = queries.contains(*it) ? cands.erase(it) : std::next(it);
  return queries;
}

MetricReport evaluate(const EngineState& state, const GroundTruth& gt, const DataLake& queries, const SearchConfig& cfg) {
  MetricReport report;
  report.k = cfg.k;
  for (const auto& [id, q] : queries) {
    auto it = gt.find(id);
    if (it == gt.end() || it->second.empty()) {
      std::fprintf(stderr, "warning: no ground truth for query %s, skipped\n", id.c_str());
      report.skipped.push_back(id);
      continue;
    }
    SearchOutcome outcome = search(q, state, cfg);
    std::vector<std::string> ids;
    for (const auto& e : outcome.result.entries) ids.push_back(e.id);
    report.queries.push_back(score_query(id, ids, outcome.pool.selected(), it->second, cfg.k));
  }
  finalize(report);
  return report;
}

BenchmarkRun run_benchmark(const DataLake& lake, const GroundTruth& gt, const DataLake& queries,
                           const EngineConfig& cfg, const EpochCallback& on_epoch) {
  for (const auto& [id, _] : queries)
    if (lake.contains(id)) throw PreconditionError("query table " + id + " is part of the training lake");
  BenchmarkRun run;
  auto t0 = std::chrono::steady_clock::now();
  TrainResult trained = train(lake, cfg.encoder, cfg.train, on_epoch);
  trained.params.round_to_float();
  auto t1 = std::chrono::steady_clock::now();
  run.epoch_loss = std::move(trained.epoch_loss);
  run.state = build_engine(lake, std::move(trained.params), cfg);
  run.embeddings = embed_lake(lake, run.state.params, run.state.serializer);
  auto t2 = std::chrono::steady_clock::now();
  run.report = evaluate(run.state, gt, queries, cfg.search);
  auto t3 = std::chrono::steady_clock::now();
  run.train_seconds = std::chrono::duration<double>(t1 - t0).count();
  run.query_seconds = std::chrono::duration<double>(t3 - t2).count();
  return run;
}

}  // namespace unionsearch
