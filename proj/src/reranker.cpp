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

#include "unionsearch/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "unionsearch/error.hpp"
#include "unionsearch/hashing.hpp"
#include "unionsearch/persist.hpp"

namespace unionsearch {

WordVectorProvider::WordVectorProvider(WordVectorConfig cfg) : cfg_(cfg) {
  if (cfg_.dim == 0 || cfg_.buckets == 0) throw ConfigError("word vectors need a positive dim and bucket count");
  if (cfg_.min_n == 0 || cfg_.min_n > cfg_.max_n) throw ConfigError("bad n-gram range");
}

WordVectorProvider WordVectorProvider::from_word2vec(const std::filesystem::path& path, WordVectorConfig cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::size_t count = 0, dim = 0;
  {
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    if (!(hs >> count >> dim) || dim == 0) throw IoError("bad word2vec header in " + path.string());
  }
  cfg.dim = dim;
  WordVectorProvider p(cfg);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> v(dim);
    for (auto& x : v)
      if (!(ls >> x)) throw IoError("short vector for '" + word + "' in " + path.string());
    std::string key = normalize_value(word);
    if (key.empty()) key = word;
    p.vocab_.emplace(std::move(key), std::move(v));
  }
  if (count != 0 && p.vocab_.size() > count) throw IoError("word2vec file has more rows than its header states");
  return p;
}

std::vector<std::uint32_t> WordVectorProvider::ngram_buckets(std::string_view word) const {
  std::string w = "<" + std::string(word) + ">";
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if ((static_cast<unsigned char>(w[i]) & 0xC0) == 0x80) continue;
    std::string ngram;
    for (std::size_t j = i, n = 1; j < w.size() && n <= cfg_.max_n; ++n) {
      ngram.push_back(w[j++]);
      while (j < w.size() && (static_cast<unsigned char>(w[j]) & 0xC0) == 0x80) ngram.push_back(w[j++]);
      if (n >= cfg_.min_n) out.push_back(fnv1a32(ngram) % static_cast<std::uint32_t>(cfg_.buckets));
    }
  }
  return out;
}

void WordVectorProvider::add_bucket_vector(std::uint32_t bucket, std::vector<double>& acc) const {
  SplitMixStream s(hash_combine(cfg_.seed, bucket));
  for (double& x : acc) x += 2.0 * s.uniform() - 1.0;
}

std::vector<double> WordVectorProvider::word_vector(std::string_view word) const {
  std::vector<double> v(cfg_.dim, 0.0);
  if (word.empty()) return v;
  if (!vocab_.empty()) {
    auto it = vocab_.find(std::string(word));
    if (it != vocab_.end()) return it->second;
  }
  auto buckets = ngram_buckets(word);
  if (buckets.empty()) return v;
  for (auto b : buckets) add_bucket_vector(b, v);
  for (double& x : v) x /= static_cast<double>(buckets.size());
  return v;
}

std::vector<double> WordVectorProvider::value_vector(std::string_view value) const {
  std::vector<double> v(cfg_.dim, 0.0);
  auto tokens = tokenize_value(value);
  if (tokens.empty()) return v;
  for (const auto& t : tokens) {
    auto w = word_vector(t);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  }
  for (double& x : v) x /= static_cast<double>(tokens.size());
  return v;
}

ColumnVector column_vector(const Column& column, const WordVectorProvider& provider) {
  ColumnVector out;
  out.vec.assign(provider.dim(), 0.0);
  double total = 0.0;
  for (const auto& [value, freq] : column_value_counts(column)) {
    auto v = provider.value_vector(value);
    const auto f = static_cast<double>(freq);
    for (std::size_t i = 0; i < v.size(); ++i) out.vec[i] += f * v[i];
    total += f;
  }
  if (total == 0.0) {
    out.empty = true;
    return out;
  }
  for (double& x : out.vec) x /= total;
  return out;
}

std::vector<ColumnVector> column_vectors(const Table& table, const WordVectorProvider& provider) {
  std::vector<ColumnVector> out;
  out.reserve(table.column_count());
  for (const auto& c : table.columns) out.push_back(column_vector(c, provider));
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double alignment_score(const std::vector<ColumnVector>& query, const std::vector<ColumnVector>& candidate) {
  if (candidate.empty()) return 0.0;
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& q : query) {
    if (q.empty) continue;
    double best = 0.0;
    for (const auto& c : candidate) best = std::max(best, cosine(q.vec, c.vec));
    sum += best;
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

double alignment_score(const Table& query, const Table& candidate, const WordVectorProvider& provider) {
  if (query.column_count() == 0) throw BadQuery("query table has no columns");
  return alignment_score(column_vectors(query, provider), column_vectors(candidate, provider));
}

void ColumnVectorStore::save(const std::filesystem::path& bin) const {
  std::vector<std::string> ids;
  std::vector<float> values;
  for (const auto& [table_id, cols] : tables) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      ids.push_back(table_id + "#" + std::to_string(j));
      for (double x : cols[j].vec) values.push_back(static_cast<float>(x));
    }
  }
  auto ids_file = ids_path_for(bin);
  write_float_rows(bin, {{"ids_file", ids_file.filename().string()}, {"format", "column-vectors"}}, dim, values);
  write_lines(ids_file, ids);
}

ColumnVectorStore ColumnVectorStore::load(const std::filesystem::path& bin) {
  EmbeddingSet set = load_embeddings(bin);
  ColumnVectorStore store;
  store.dim = set.dim;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string& key = set.ids[i];
    auto hash = key.rfind('#');
    if (hash == std::string::npos) throw IoError("bad column id: " + key);
    std::string table_id = key.substr(0, hash);
    std::size_t pos = std::stoul(key.substr(hash + 1));
    auto& cols = store.tables[table_id];
    if (pos != cols.size()) throw IoError("column ids out of order for " + table_id);
    ColumnVector cv;
    auto row = set.row(i);
    cv.vec.assign(row.begin(), row.end());
    cv.empty = std::all_of(cv.vec.begin(), cv.vec.end(), [](double x) { return x == 0.0; });
    cols.push_back(std::move(cv));
  }
  return store;
}

const std::vector<ColumnVector>& ColumnVectorStore::at(const std::string& table_id) const {
  auto it = tables.find(table_id);
  if (it == tables.end()) throw Error("no column vectors for table " + table_id);
  return it->second;
}

ColumnVectorStore build_column_store(const DataLake& lake, const WordVectorProvider& provider) {
  ColumnVectorStore store;
  store.dim = provider.dim();
  for (const auto& [id, t] : lake) store.tables.emplace(id, column_vectors(t, provider));
  return store;
}

}  // namespace unionsearch
