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

#include "unionsearch/persist.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "unionsearch/error.hpp"

namespace unionsearch {
namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

}  // namespace

std::filesystem::path ids_path_for(const std::filesystem::path& bin) {
  auto p = bin;
  p.replace_extension(".ids");
  return p;
}

void write_float_rows(const std::filesystem::path& path, nlohmann::json header, std::size_t dim,
                      std::span<const float> values) {
  if (dim == 0 || values.size() % dim != 0) throw IoError("float rows: size is not a multiple of dim");
  header["dim"] = dim;
  header["count"] = values.size() / dim;
  if (!header.contains("ids_file")) header["ids_file"] = nullptr;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump() << '\n';
  std::vector<std::uint32_t> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) buf[i] = to_little(std::bit_cast<std::uint32_t>(values[i]));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  if (!out) throw IoError("write failed: " + path.string());
}

FloatRows read_float_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing header in " + path.string());
  FloatRows rows;
  try {
    rows.header = nlohmann::json::parse(line);
    rows.dim = rows.header.at("dim").get<std::size_t>();
    rows.count = rows.header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad header in " + path.string() + ": " + e.what());
  }
  std::vector<std::uint32_t> buf(rows.dim * rows.count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * 4) throw IoError("truncated data in " + path.string());
  rows.values.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) rows.values[i] = std::bit_cast<float>(to_little(buf[i]));
  return rows;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

EmbeddingSet to_embedding_set(const std::vector<TableEmbedding>& embeddings) {
  EmbeddingSet set;
  if (embeddings.empty()) return set;
  set.dim = embeddings.front().vec.size();
  for (const auto& e : embeddings) {
    if (e.vec.size() != set.dim) throw BuildError("embedding dimension mismatch for " + e.table_id);
    set.ids.push_back(e.table_id);
    for (double v : e.vec) set.values.push_back(static_cast<float>(v));
  }
  return set;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  auto ids = ids_path_for(path);
  write_float_rows(path, {{"ids_file", ids.filename().string()}}, set.dim, set.values);
  write_lines(ids, set.ids);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  FloatRows rows = read_float_rows(path);
  EmbeddingSet set;
  set.dim = rows.dim;
  set.values = std::move(rows.values);
  std::filesystem::path ids = ids_path_for(path);
  if (rows.header.contains("ids_file") && rows.header["ids_file"].is_string())
    ids = path.parent_path() / rows.header["ids_file"].get<std::string>();
  set.ids = read_lines(ids);
  if (set.ids.size() != rows.count) throw IoError("id count does not match rows in " + path.string());
  return set;
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"vocab_buckets", c.vocab_buckets}, {"dim", c.dim},         {"layers", c.layers},
          {"heads", c.heads},                 {"ffn_dim", c.ffn_dim}, {"mlp_hidden", c.mlp_hidden},
          {"out_dim", c.out_dim},             {"positional", c.positional}, {"seed", c.seed}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_buckets = j.at("vocab_buckets").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  c.out_dim = j.at("out_dim").get<std::size_t>();
  c.positional = j.at("positional").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// Checkpoints store each tensor as rows of its own width, so the shared
// header's "dim" is 1 and "count" is the total number of scalars.
void save_params(const std::filesystem::path& path, const EncoderParams& params) {
  nlohmann::json layout = nlohmann::json::array();
  std::vector<float> values;
  values.reserve(params.parameter_count());
  for (const auto& t : tensors(params)) {
    layout.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    for (double v : t.values) values.push_back(static_cast<float>(v));
  }
  nlohmann::json header = {{"format", "encoder-params"}, {"version", 1}, {"config", to_json(params.config)},
                           {"tensors", layout}};
  write_float_rows(path, std::move(header), 1, values);
}

EncoderParams load_params(const std::filesystem::path& path) {
  FloatRows rows = read_float_rows(path);
  if (rows.header.value("format", "") != "encoder-params") throw IoError("not an encoder checkpoint: " + path.string());
  EncoderParams params = EncoderParams::zeros(encoder_config_from_json(rows.header.at("config")));
  auto views = tensors(params);
  const auto& layout = rows.header.at("tensors");
  if (layout.size() != views.size()) throw ConfigError("checkpoint tensor count mismatch");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (layout[i].at("name") != views[i].name || layout[i].at("rows").get<std::size_t>() != views[i].rows ||
        layout[i].at("cols").get<std::size_t>() != views[i].cols)
      throw ConfigError("checkpoint tensor mismatch at " + views[i].name);
    if (offset + views[i].values.size() > rows.values.size()) throw IoError("truncated checkpoint");
    for (double& v : views[i].values) v = rows.values[offset++];
  }
  if (offset != rows.values.size()) throw IoError("trailing data in checkpoint");
  return params;
}

}  // namespace unionsearch
