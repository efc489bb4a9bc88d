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
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace unionsearch {

struct Column {
  std::vector<std::string> cells;
  std::size_t position = 0;

  bool operator==(const Column&) const = default;
};

// A table is a bag of string columns. Header rows are never stored; every
// column holds exactly n_rows cells.
struct Table {
  std::string id;
  std::vector<Column> columns;
  std::size_t n_rows = 0;

  // Builds a table from column-major cells, padding short columns with "".
  static Table from_columns(std::string id, std::vector<std::vector<std::string>> columns);
  // Builds a table from row-major cells, padding ragged rows with "".
  static Table from_rows(std::string id, const std::vector<std::vector<std::string>>& rows);

  std::size_t column_count() const { return columns.size(); }
  bool empty() const { return columns.empty() || n_rows == 0; }

  // Keeps the listed rows (in the given order) and columns; positions are
  // renumbered from 0.
  Table select(std::string new_id, const std::vector<std::size_t>& rows,
               const std::vector<std::size_t>& cols) const;

  bool operator==(const Table&) const = default;
};

// Tables keyed by id; iteration order is the id order.
class DataLake {
 public:
  void add(Table table);
  const Table& at(const std::string& id) const;
  bool contains(const std::string& id) const { return tables_.count(id) != 0; }
  std::size_t size() const { return tables_.size(); }
  bool empty() const { return tables_.empty(); }
  std::vector<std::string> ids() const;
  Table extract(const std::string& id);

  auto begin() const { return tables_.begin(); }
  auto end() const { return tables_.end(); }

 private:
  std::map<std::string, Table> tables_;
};

struct IngestOptions {
  bool has_header = true;
  std::size_t max_cell_chars = 256;
};

Table parse_csv(std::string_view text, std::string id, const IngestOptions& opts = {});
Table ingest_csv(const std::filesystem::path& path, const IngestOptions& opts = {});
// With `header`, a synthetic "c0,c1,..." row is written first.
void write_csv(const Table& table, std::ostream& out, bool header = true);
void write_csv(const Table& table, const std::filesystem::path& path, bool header = true);

// Every *.csv file directly inside `dir`; the file stem becomes the table id.
DataLake load_lake(const std::filesystem::path& dir, const IngestOptions& opts = {});
void write_lake(const DataLake& lake, const std::filesystem::path& dir, bool header = true);

// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
// UTF-8 text survives intact.
std::vector<std::string> tokenize_value(std::string_view cell);

// Tokens joined by single spaces; "" when the cell has no tokens.
std::string normalize_value(std::string_view cell);

// Per-column frequency of each normalized non-empty value.
struct ValueStats {
  std::vector<std::map<std::string, std::size_t>> columns;
};

ValueStats value_stats(const Table& table);
std::map<std::string, std::size_t> column_value_counts(const Column& column);

// Fractions are drawn uniformly from [min, max] once per pair; min == max
// pins the fraction.
struct PairConfig {
  double row_fraction_min = 0.5;
  double row_fraction_max = 0.9;
  double column_fraction_min = 0.5;
  double column_fraction_max = 1.0;
};

struct PositivePair {
  Table anchor;
  Table positive;
};

// The positive keeps a random subset of columns and a shuffled random subset
// of rows; the anchor is an independent row sample of the full table. Both
// keep at least one row and one column, so every positive cell occurs in the
// source table.
PositivePair sample_positive(const Table& table, std::mt19937_64& rng, const PairConfig& cfg = {});

}  // namespace unionsearch
