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

#include "unionsearch/vector_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <unordered_set>

#include "unionsearch/error.hpp"

namespace unionsearch {
namespace {

constexpr int kGraphVersion = 1;

double dot_ff(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

bool ranks_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

struct Candidate {
  double dist;
  std::uint32_t node;
  bool operator<(const Candidate& o) const { return dist < o.dist || (dist == o.dist && node < o.node); }
  bool operator>(const Candidate& o) const { return o < *this; }
};

using MinHeap = std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>>;
using MaxHeap = std::priority_queue<Candidate>;

// Distances are 1 - cosine; `dist_to` maps a node to its distance from the
// current query.
template <typename DistFn>
std::vector<Candidate> search_layer(const HnswGraph& g, DistFn&& dist_to, const std::vector<Candidate>& entry,
                                    std::size_t ef, std::size_t layer, std::vector<std::uint32_t>& visited,
                                    std::uint32_t& visit_tag) {
  ++visit_tag;
  MinHeap frontier;
  MaxHeap best;
  for (const auto& c : entry) {
    visited[c.node] = visit_tag;
    frontier.push(c);
    best.push(c);
  }
  while (best.size() > ef) best.pop();
  while (!frontier.empty()) {
    Candidate cur = frontier.top();
    if (cur.dist > best.top().dist && best.size() >= ef) break;
    frontier.pop();
    const auto& layers = g.links[cur.node];
    if (layer >= layers.size()) continue;
    for (std::uint32_t nb : layers[layer]) {
      if (visited[nb] == visit_tag) continue;
      visited[nb] = visit_tag;
      double d = dist_to(nb);
      if (best.size() < ef || d < best.top().dist) {
        frontier.push({d, nb});
        best.push({d, nb});
        if (best.size() > ef) best.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Neighbor-diversity heuristic: keep a candidate only if it is closer to the
// base than to every neighbor kept so far.
std::vector<std::uint32_t> select_neighbors(const EmbeddingSet& data, std::vector<Candidate> cands, std::size_t m) {
  std::sort(cands.begin(), cands.end());
  std::vector<std::uint32_t> kept;
  std::vector<std::uint32_t> pruned;
  for (const auto& c : cands) {
    if (kept.size() >= m) break;
    bool good = true;
    for (std::uint32_t k : kept) {
      double d = 1.0 - dot_ff(data.row(c.node), data.row(k));
      if (d < c.dist) {
        good = false;
        break;
      }
    }
    (good ? kept : pruned).push_back(c.node);
  }
  for (std::uint32_t p : pruned) {
    if (kept.size() >= m) break;
    kept.push_back(p);
  }
  return kept;
}

std::shared_ptr<HnswGraph> build_graph(const EmbeddingSet& data, const IndexParams& params) {
  auto g = std::make_shared<HnswGraph>();
  g->m = std::max<std::size_t>(params.m, 2);
  g->ef_construction = std::max(params.ef_construction, g->m);
  g->ef_search = params.ef_search;
  const std::size_t n = data.size();
  const std::size_t m0 = 2 * g->m;
  const double level_mult = 1.0 / std::log(static_cast<double>(g->m));
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  g->levels.resize(n);
  g->links.resize(n);
  std::vector<std::uint32_t> visited(n, 0);
  std::uint32_t tag = 0;

  for (std::size_t i = 0; i < n; ++i) {
    double u = std::max(unif(rng), 1e-12);
    auto level = static_cast<std::size_t>(std::floor(-std::log(u) * level_mult));
    g->levels[i] = level;
    g->links[i].resize(level + 1);
    if (i == 0) {
      g->entry = 0;
      g->max_level = level;
      continue;
    }
    auto q = data.row(i);
    auto dist_to = [&](std::uint32_t node) { return 1.0 - dot_ff(q, data.row(node)); };
    std::vector<Candidate> ep{{dist_to(static_cast<std::uint32_t>(g->entry)), static_cast<std::uint32_t>(g->entry)}};
    for (std::size_t lc = g->max_level; lc > level; --lc) ep = {search_layer(*g, dist_to, ep, 1, lc, visited, tag).front()};
    for (std::size_t lc = std::min(level, g->max_level) + 1; lc-- > 0;) {
      auto found = search_layer(*g, dist_to, ep, g->ef_construction, lc, visited, tag);
      const std::size_t cap = lc == 0 ? m0 : g->m;
      auto neighbors = select_neighbors(data, found, g->m);
      g->links[i][lc] = neighbors;
      for (std::uint32_t nb : neighbors) {
        auto& list = g->links[nb][lc];
        list.push_back(static_cast<std::uint32_t>(i));
        if (list.size() > cap) {
          std::vector<Candidate> c;
          c.reserve(list.size());
          for (std::uint32_t x : list) c.push_back({1.0 - dot_ff(data.row(nb), data.row(x)), x});
          list = select_neighbors(data, std::move(c), cap);
        }
      }
      ep = std::move(found);
    }
    if (level > g->max_level) {
      g->max_level = level;
      g->entry = i;
    }
  }
  return g;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated hnsw graph");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

IndexMode parse_index_mode(const std::string& s) {
  if (s == "exact") return IndexMode::kExact;
  if (s == "hnsw") return IndexMode::kHnsw;
  throw ConfigError("unknown index mode: " + s);
}

std::string to_string(IndexMode mode) { return mode == IndexMode::kExact ? "exact" : "hnsw"; }

IndexMode default_index_mode(std::size_t n) { return n < 50000 ? IndexMode::kExact : IndexMode::kHnsw; }

double dot(std::span<const double> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * static_cast<double>(b[i]);
  return s;
}

EmbeddingIndex EmbeddingIndex::build(EmbeddingSet embeddings, IndexMode mode, const IndexParams& params) {
  if (embeddings.size() == 0) throw BuildError("cannot build an index from zero embeddings");
  if (embeddings.dim == 0 || embeddings.values.size() != embeddings.size() * embeddings.dim)
    throw BuildError("embedding dimension mismatch");
  std::unordered_set<std::string> seen;
  for (const auto& id : embeddings.ids)
    if (!seen.insert(id).second) throw BuildError("duplicate id in index: " + id);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    double norm = std::sqrt(dot_ff(embeddings.row(i), embeddings.row(i)));
    if (std::abs(norm - 1.0) > 1e-5) throw BuildError("embedding is not unit-norm: " + embeddings.ids[i]);
  }
  EmbeddingIndex idx;
  idx.data_ = std::move(embeddings);
  idx.mode_ = mode;
  if (mode == IndexMode::kHnsw) idx.graph_ = build_graph(idx.data_, params);
  return idx;
}

EmbeddingIndex EmbeddingIndex::build(const std::vector<TableEmbedding>& embeddings, IndexMode mode,
                                     const IndexParams& params) {
  return build(to_embedding_set(embeddings), mode, params);
}

std::vector<ScoredId> EmbeddingIndex::topk(std::span<const double> query, std::size_t k) const {
  if (data_.size() == 0) throw EmptyIndex("index is empty");
  if (k == 0) throw PreconditionError("topk: k must be >= 1");
  if (query.size() != data_.dim) throw PreconditionError("topk: query dimension mismatch");
  return mode_ == IndexMode::kExact ? exact_topk(query, k) : hnsw_topk(query, k);
}

std::vector<ScoredId> EmbeddingIndex::exact_topk(std::span<const double> query, std::size_t k) const {
  std::vector<ScoredId> all;
  all.reserve(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i)
    all.push_back({data_.ids[i], std::clamp(dot(query, data_.row(i)), 0.0, 1.0)});
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.resize(k);
  return all;
}

std::vector<ScoredId> EmbeddingIndex::hnsw_topk(std::span<const double> query, std::size_t k) const {
  const HnswGraph& g = *graph_;
  auto dist_to = [&](std::uint32_t node) { return 1.0 - dot(query, data_.row(node)); };
  std::vector<std::uint32_t> visited(data_.size(), 0);
  std::uint32_t tag = 0;
  const auto entry = static_cast<std::uint32_t>(g.entry);
  std::vector<Candidate> ep{{dist_to(entry), entry}};
  for (std::size_t lc = g.max_level; lc > 0; --lc) ep = {search_layer(g, dist_to, ep, 1, lc, visited, tag).front()};
  const std::size_t ef = std::max({g.ef_search, 2 * k, k});
  auto found = search_layer(g, dist_to, ep, ef, 0, visited, tag);
  std::vector<ScoredId> out;
  out.reserve(found.size());
  for (const auto& c : found) out.push_back({data_.ids[c.node], std::clamp(dot(query, data_.row(c.node)), 0.0, 1.0)});
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > k) out.resize(k);
  return out;
}

void EmbeddingIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_embeddings(dir / "vectors.bin", data_);
  nlohmann::json meta = {{"format", "embedding-index"}, {"version", kGraphVersion}, {"mode", to_string(mode_)}};
  {
    std::ofstream out(dir / "index.json");
    if (!out) throw IoError("cannot write " + (dir / "index.json").string());
    out << meta.dump(2) << '\n';
  }
  if (mode_ != IndexMode::kHnsw) return;
  const HnswGraph& g = *graph_;
  std::ofstream out(dir / "hnsw.bin", std::ios::binary);
  if (!out) throw IoError("cannot write hnsw graph");
  nlohmann::json header = {{"format", "hnsw-graph"},  {"version", kGraphVersion}, {"m", g.m},
                           {"ef_construction", g.ef_construction}, {"ef_search", g.ef_search},
                           {"entry", g.entry},        {"max_level", g.max_level}, {"count", g.levels.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < g.levels.size(); ++i) {
    write_u32(out, static_cast<std::uint32_t>(g.levels[i]));
    for (const auto& layer : g.links[i]) {
      write_u32(out, static_cast<std::uint32_t>(layer.size()));
      for (std::uint32_t nb : layer) write_u32(out, nb);
    }
  }
  if (!out) throw IoError("write failed for hnsw graph");
}

EmbeddingIndex EmbeddingIndex::load(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "index.json");
  if (!meta_in) throw IoError("missing index.json in " + dir.string());
  nlohmann::json meta = nlohmann::json::parse(meta_in);
  if (meta.value("version", 0) != kGraphVersion) throw IoError("unsupported index version");
  EmbeddingIndex idx;
  idx.data_ = load_embeddings(dir / "vectors.bin");
  idx.mode_ = parse_index_mode(meta.at("mode").get<std::string>());
  if (idx.mode_ != IndexMode::kHnsw) return idx;

  std::ifstream in(dir / "hnsw.bin", std::ios::binary);
  if (!in) throw IoError("missing hnsw.bin in " + dir.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json h = nlohmann::json::parse(line);
  if (h.value("format", "") != "hnsw-graph" || h.value("version", 0) != kGraphVersion)
    throw IoError("unsupported hnsw graph format");
  auto g = std::make_shared<HnswGraph>();
  g->m = h.at("m");
  g->ef_construction = h.at("ef_construction");
  g->ef_search = h.at("ef_search");
  g->entry = h.at("entry");
  g->max_level = h.at("max_level");
  const std::size_t count = h.at("count");
  if (count != idx.data_.size()) throw IoError("hnsw graph does not match vectors");
  g->levels.resize(count);
  g->links.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    g->levels[i] = read_u32(in);
    g->links[i].resize(g->levels[i] + 1);
    for (auto& layer : g->links[i]) {
      layer.resize(read_u32(in));
      for (auto& nb : layer) {
        nb = read_u32(in);
        if (nb >= count) throw IoError("corrupt hnsw graph");
      }
    }
  }
  idx.graph_ = std::move(g);
  return idx;
}

}  // namespace unionsearch
