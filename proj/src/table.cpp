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

#include "unionsearch/table.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "unionsearch/error.hpp"

namespace unionsearch {
namespace {

std::string clip_cell(std::string cell, std::size_t max_chars) {
  if (max_chars == 0 || cell.size() <= max_chars) return cell;
  std::size_t cut = max_chars;
  // Do not split a UTF-8 sequence.
  while (cut > 0 && (static_cast<unsigned char>(cell[cut]) & 0xC0) == 0x80) --cut;
  cell.resize(cut);
  return cell;
}

struct Records {
  std::vector<std::vector<std::string>> rows;
  std::vector<bool> blank;  // the row came from an empty line
};

Records parse_records(std::string_view text) {
  Records rec;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    rec.blank.push_back(row.empty() && field.empty() && !field_started);
    end_field();
    rec.rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      end_row();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw IoError("unterminated quoted field");
  if (field_started || !row.empty() || !field.empty()) end_row();
  return rec;
}

bool needs_quotes(const std::string& s) {
  return s.empty() || s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& s, bool force) {
  if (!force && !needs_quotes(s)) {
    out << s;
    return;
  }
  if (!force && s.empty()) return;
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

std::size_t fraction_count(double fraction, std::size_t n) {
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(count, 1, n);
}

double draw_fraction(double lo, double hi, std::mt19937_64& rng) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  return idx;
}

}  // namespace

Table Table::from_columns(std::string id, std::vector<std::vector<std::string>> columns) {
  Table t;
  t.id = std::move(id);
  for (const auto& c : columns) t.n_rows = std::max(t.n_rows, c.size());
  t.columns.reserve(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    Column col{std::move(columns[j]), j};
    col.cells.resize(t.n_rows);
    t.columns.push_back(std::move(col));
  }
  return t;
}

Table Table::from_rows(std::string id, const std::vector<std::vector<std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  std::vector<std::vector<std::string>> cols(width, std::vector<std::string>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) cols[j][i] = rows[i][j];
  Table t = from_columns(std::move(id), std::move(cols));
  t.n_rows = rows.size();
  return t;
}

Table Table::select(std::string new_id, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& cols) const {
  Table out;
  out.id = std::move(new_id);
  out.n_rows = rows.size();
  out.columns.reserve(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const Column& src = columns.at(cols[j]);
    Column c;
    c.position = j;
    c.cells.reserve(rows.size());
    for (std::size_t r : rows) c.cells.push_back(src.cells.at(r));
    out.columns.push_back(std::move(c));
  }
  return out;
}

void DataLake::add(Table table) {
  if (tables_.count(table.id)) throw BuildError("duplicate table id: " + table.id);
  std::string id = table.id;
  tables_.emplace(std::move(id), std::move(table));
}

const Table& DataLake::at(const std::string& id) const {
  auto it = tables_.find(id);
  if (it == tables_.end()) throw Error("unknown table id: " + id);
  return it->second;
}

std::vector<std::string> DataLake::ids() const {
  std::vector<std::string> out;
  out.reserve(tables_.size());
  for (const auto& [id, _] : tables_) out.push_back(id);
  return out;
}

Table DataLake::extract(const std::string& id) {
  auto node = tables_.extract(id);
  if (node.empty()) throw Error("unknown table id: " + id);
  return std::move(node.mapped());
}

Table parse_csv(std::string_view text, std::string id, const IngestOptions& opts) {
  auto [rows, blank] = parse_records(text);
  if (opts.has_header && !rows.empty()) {
    rows.erase(rows.begin());
    blank.erase(blank.begin());
  }
  while (!rows.empty() && blank.back()) {
    rows.pop_back();
    blank.pop_back();
  }
  if (rows.empty()) throw EmptyTable("table '" + id + "' has no data rows");
  for (auto& r : rows)
    for (auto& cell : r) cell = clip_cell(std::move(cell), opts.max_cell_chars);
  return Table::from_rows(std::move(id), rows);
}

Table ingest_csv(const std::filesystem::path& path, const IngestOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return parse_csv(buf.str(), path.stem().string(), opts);
}

void write_csv(const Table& table, std::ostream& out, bool header) {
  if (header) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) out << (j ? ",c" : "c") << j;
    out << '\n';
  }
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    // A lone empty field must be quoted or the row reads back as blank.
    bool single = table.columns.size() == 1;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      if (j) out << ',';
      const std::string& cell = table.columns[j].cells[r];
      write_field(out, cell, single && cell.empty());
    }
    out << '\n';
  }
}

void write_csv(const Table& table, const std::filesystem::path& path, bool header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(table, out, header);
}

DataLake load_lake(const std::filesystem::path& dir, const IngestOptions& opts) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  DataLake lake;
  for (const auto& f : files) lake.add(ingest_csv(f, opts));
  return lake;
}

void write_lake(const DataLake& lake, const std::filesystem::path& dir, bool header) {
  std::filesystem::create_directories(dir);
  for (const auto& [id, t] : lake) write_csv(t, dir / (id + ".csv"), header);
}

std::vector<std::string> tokenize_value(std::string_view cell) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : cell) {
    auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::string normalize_value(std::string_view cell) {
  std::string out;
  for (const auto& tok : tokenize_value(cell)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

std::map<std::string, std::size_t> column_value_counts(const Column& column) {
  std::map<std::string, std::size_t> counts;
  for (const auto& cell : column.cells) {
    std::string v = normalize_value(cell);
    if (!v.empty()) ++counts[v];
  }
  return counts;
}

ValueStats value_stats(const Table& table) {
  ValueStats stats;
  stats.columns.reserve(table.columns.size());
  for (const auto& c : table.columns) stats.columns.push_back(column_value_counts(c));
  return stats;
}

PositivePair sample_positive(const Table& table, std::mt19937_64& rng, const PairConfig& cfg) {
  if (table.empty()) throw PreconditionError("sample_positive: table '" + table.id + "' is empty");
  const double row_fraction = draw_fraction(cfg.row_fraction_min, cfg.row_fraction_max, rng);
  const double col_fraction = draw_fraction(cfg.column_fraction_min, cfg.column_fraction_max, rng);
  const std::size_t n_rows = fraction_count(row_fraction, table.n_rows);
  const std::size_t n_cols = fraction_count(col_fraction, table.column_count());

  std::vector<std::size_t> pos_cols = draw_subset(table.column_count(), n_cols, rng);
  std::sort(pos_cols.begin(), pos_cols.end());
  std::vector<std::size_t> pos_rows = draw_subset(table.n_rows, n_rows, rng);  // stays shuffled

  std::vector<std::size_t> anchor_rows = draw_subset(table.n_rows, n_rows, rng);
  std::sort(anchor_rows.begin(), anchor_rows.end());
  std::vector<std::size_t> all_cols(table.column_count());
  for (std::size_t j = 0; j < all_cols.size(); ++j) all_cols[j] = j;

  return {table.select(table.id, anchor_rows, all_cols), table.select(table.id, pos_rows, pos_cols)};
}

}  // namespace unionsearch
