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

#include <map>
#include <random>

#include "doctest.h"
#include "unionsearch/serializer.hpp"

using namespace unionsearch;

namespace {

Table random_table(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"alpha", "beta", "gamma delta", "eps", "zeta eta theta", "", "iota"};
  std::size_t rows = 1 + rng() % 10, cols = 1 + rng() % 5;
  std::vector<std::vector<std::string>> c(cols);
  for (auto& col : c)
    for (std::size_t r = 0; r < rows; ++r) col.push_back(words[rng() % words.size()]);
  return Table::from_columns("rt" + std::to_string(rng() % 1000), c);
}

// Tokens of one column segment, [CLS] excluded.
std::vector<std::vector<TokenId>> segments(const TokenSequence& s) {
  std::vector<std::vector<TokenId>> out;
  for (std::size_t k = 0; k < s.cls_positions.size(); ++k) {
    std::size_t begin = s.cls_positions[k] + 1;
    std::size_t end = k + 1 < s.cls_positions.size() ? s.cls_positions[k + 1] : s.tokens.size();
    out.emplace_back(s.tokens.begin() + begin, s.tokens.begin() + end);
  }
  return out;
}

}  // namespace

TEST_CASE("priority weights with h fixed to 1 follow term frequency") {
  Table t = Table::from_columns("t", {{"a", "a", "b"}});
  PriorityWeights w = priority_weights(t, unit_noise());
  REQUIRE(w.columns.size() == 1);
  REQUIRE(w.columns[0].size() == 2);
  CHECK(w.columns[0][0].value == "a");
  CHECK(w.columns[0][0].weight == 2.0);
  CHECK(w.columns[0][1].value == "b");
  CHECK(w.columns[0][1].weight == 1.0);
}

TEST_CASE("priority weights divide term frequency by h") {
  Table t = Table::from_columns("t", {{"x", "x", "x", "y"}});
  PriorityNoise h = [](std::size_t, std::string_view v) { return v == "x" ? 1.0 : 0.8; };
  PriorityWeights w = priority_weights(t, h);
  REQUIRE(w.columns[0].size() == 2);
  CHECK(w.columns[0][0].value == "x");
  CHECK(w.columns[0][0].weight == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(w.columns[0][1].value == "y");
  CHECK(w.columns[0][1].weight == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("a single unique value ranks first for any h") {
  Table t = Table::from_columns("t", {{"v", "v"}});
  for (std::uint64_t salt = 0; salt < 10; ++salt) {
    PriorityWeights w = priority_weights(t, salt);
    REQUIRE(w.columns[0].size() == 1);
    CHECK(w.columns[0][0].value == "v");
    CHECK(w.columns[0][0].weight >= 2.0);
    CHECK(w.columns[0][0].weight <= 2.5);
  }
}

TEST_CASE("seeded noise stays in [0.8, 1] and is deterministic") {
  PriorityNoise a = seeded_noise("table", 3);
  PriorityNoise b = seeded_noise("table", 3);
  PriorityNoise c = seeded_noise("table", 4);
  bool differs = false;
  for (std::size_t col = 0; col < 5; ++col) {
    for (std::string v : {"x", "y", "z", "long value"}) {
      double h = a(col, v);
      CHECK(h >= 0.8);
      CHECK(h <= 1.0);
      CHECK(h == b(col, v));
      differs |= h != c(col, v);
    }
  }
  CHECK(differs);
}

TEST_CASE("two columns fit exactly in a budget of four") {
  Table t = Table::from_columns("t", {{"a"}, {"b"}});
  TokenSequence s = serialize(t, priority_weights(t, unit_noise()), 4);
  CHECK(s.tokens == std::vector<TokenId>{kClsToken, token_id("a"), kClsToken, token_id("b")});
  CHECK(s.cls_positions == std::vector<std::size_t>{0, 2});
  CHECK(s.source_columns == std::vector<std::size_t>{0, 1});
}

TEST_CASE("budget two keeps only the top value") {
  Table t = Table::from_columns("t", {{"v1", "v1", "v1", "v2", "v2", "v3"}});
  TokenSequence s = serialize(t, priority_weights(t, unit_noise()), 2);
  CHECK(s.tokens == std::vector<TokenId>{kClsToken, token_id("v1")});
}

TEST_CASE("columns whose first item does not fit are omitted") {
  Table t = Table::from_columns("t", {{"a"}, {"b"}, {"c"}});
  TokenSequence s = serialize(t, priority_weights(t, unit_noise()), 5);
  CHECK(s.column_count() == 2);
  CHECK(s.size() == 4);
  TokenSequence tiny = serialize(t, priority_weights(t, unit_noise()), 1);
  CHECK(tiny.tokens == std::vector<TokenId>{kClsToken});
  CHECK(tiny.cls_positions == std::vector<std::size_t>{0});
}

TEST_CASE("multi-token values are emitted whole") {
  Table t = Table::from_columns("t", {{"new york", "new york", "la"}});
  TokenSequence s = serialize(t, priority_weights(t, unit_noise()), 3);
  CHECK(s.tokens == std::vector<TokenId>{kClsToken, token_id("new"), token_id("york")});
}

TEST_CASE("round robin takes one value per column per round") {
  Table t = Table::from_columns("t", {{"a", "a", "b"}, {"x", "x", "y"}});
  TokenSequence s = serialize(t, priority_weights(t, unit_noise()), 6);
  auto seg = segments(s);
  REQUIRE(seg.size() == 2);
  CHECK(seg[0] == std::vector<TokenId>{token_id("a"), token_id("b")});
  CHECK(seg[1] == std::vector<TokenId>{token_id("x"), token_id("y")});
  TokenSequence five = serialize(t, priority_weights(t, unit_noise()), 5);
  auto seg5 = segments(five);
  CHECK(seg5[0] == std::vector<TokenId>{token_id("a"), token_id("b")});
  CHECK(seg5[1] == std::vector<TokenId>{token_id("x")});
}

TEST_CASE("output never exceeds the budget and is deterministic") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    Table t = random_table(rng);
    std::size_t budget = 1 + rng() % 40;
    SerializerConfig cfg{budget, false, rng() % 4};
    TokenSequence s = serialize_table(t, cfg);
    CHECK(s.size() <= budget);
    CHECK(!s.empty());
    CHECK(s.tokens[0] == kClsToken);
    TokenSequence again = serialize_table(t, cfg);
    CHECK(s.tokens == again.tokens);
    CHECK(s.cls_positions == again.cls_positions);
  }
  Table big = Table::from_columns("big", {std::vector<std::string>(500, "w")});
  for (std::size_t r = 0; r < 500; ++r) big.columns[0].cells[r] = "w" + std::to_string(r);
  CHECK(serialize_table(big, {}).size() <= 256);
}

TEST_CASE("with h fixed to 1 a value is kept only if every higher-TF value is kept") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    Table t = random_table(rng);
    std::size_t budget = 1 + rng() % 30;
    PriorityWeights w = priority_weights(t, unit_noise());
    TokenSequence s = serialize(t, w, budget);
    auto seg = segments(s);
    for (std::size_t k = 0; k < seg.size(); ++k) {
      std::size_t col = s.source_columns[k];
      // Re-tokenize the ranked values to find how many leading values were kept.
      std::vector<TokenId> prefix;
      std::size_t kept = 0;
      for (const auto& wv : w.columns[col]) {
        std::vector<TokenId> toks;
        for (const auto& tok : tokenize_value(wv.value)) toks.push_back(token_id(tok));
        std::vector<TokenId> next = prefix;
        next.insert(next.end(), toks.begin(), toks.end());
        if (next.size() > seg[k].size() || !std::equal(next.begin(), next.end(), seg[k].begin())) break;
        prefix = next;
        ++kept;
      }
      CHECK(prefix == seg[k]);
      std::map<std::string, std::size_t> tf = column_value_counts(t.columns[col]);
      for (std::size_t a = kept; a < w.columns[col].size(); ++a)
        for (std::size_t b = 0; b < kept; ++b) CHECK(tf[w.columns[col][b].value] >= tf[w.columns[col][a].value]);
    }
  }
}
