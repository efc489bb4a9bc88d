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
#include <numeric>
#include <random>

#include "doctest.h"
#include "unionsearch/error.hpp"
#include "unionsearch/eval.hpp"
#include "unionsearch/trainer.hpp"

using namespace unionsearch;

namespace {

DataLake numbered_lake(std::size_t n) {
  DataLake lake;
  for (std::size_t i = 0; i < n; ++i) lake.add(Table::from_columns("t" + std::to_string(i), {{"v" + std::to_string(i)}}));
  return lake;
}

std::vector<std::size_t> sizes(const std::vector<std::vector<std::string>>& batches) {
  std::vector<std::size_t> out;
  for (const auto& b : batches) out.push_back(b.size());
  return out;
}

// Brute-force negative selection: filter by threshold, then take the top
// ceil(|rest|/2) by (similarity desc, id asc, index asc).
NegativeSets oracle_negatives(const Matrix& sim, const std::vector<std::size_t>& partner,
                              const std::vector<std::string>& ids, double gamma) {
  const std::size_t n = partner.size();
  NegativeSets out;
  out.latent_positives.resize(n);
  out.hard_negatives.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || j == partner[i]) continue;
      (sim(i, j) > gamma ? out.latent_positives[i] : rest).push_back(j);
    }
    std::size_t take = rest.size() / 2 + rest.size() % 2;
    for (std::size_t t = 0; t < take; ++t) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < rest.size(); ++c) {
        double sc = sim(i, rest[c]), sb = sim(i, rest[best]);
        bool better = sc > sb || (sc == sb && (ids[rest[c]] < ids[rest[best]] ||
                                               (ids[rest[c]] == ids[rest[best]] && rest[c] < rest[best])));
        if (better) best = c;
      }
      out.hard_negatives[i].push_back(rest[best]);
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  return out;
}

std::vector<std::size_t> paired(std::size_t n_tables) {
  std::vector<std::size_t> partner(2 * n_tables);
  for (std::size_t i = 0; i < n_tables; ++i) {
    partner[i] = i + n_tables;
    partner[i + n_tables] = i;
  }
  return partner;
}

Matrix random_unit_rows(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(rows, dim);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n01(rng);
    m.row(i).normalize();
  }
  return m;
}

EncoderConfig tiny_encoder() {
  EncoderConfig cfg;
  cfg.vocab_buckets = 1024;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.ffn_dim = 32;
  cfg.mlp_hidden = 32;
  cfg.out_dim = 16;
  return cfg;
}

}  // namespace

TEST_CASE("build_batches chunking") {
  std::mt19937_64 rng(1);
  CHECK(sizes(build_batches(numbered_lake(130), 64, rng)) == std::vector<std::size_t>{64, 64, 2});
  CHECK(sizes(build_batches(numbered_lake(65), 64, rng)) == std::vector<std::size_t>{63, 2});
  CHECK(sizes(build_batches(numbered_lake(2), 64, rng)) == std::vector<std::size_t>{2});
  CHECK(sizes(build_batches(numbered_lake(5), 2, rng)) == std::vector<std::size_t>{2, 3});
  CHECK_THROWS_AS(build_batches(numbered_lake(1), 64, rng), TooFewTables);
}

TEST_CASE("build_batches is a seeded partition of the lake") {
  DataLake lake = numbered_lake(97);
  std::mt19937_64 a(4), b(4);
  auto pa = build_batches(lake, 10, a);
  CHECK(pa == build_batches(lake, 10, b));
  std::vector<std::string> all;
  for (const auto& batch : pa) {
    CHECK(batch.size() >= 2);
    CHECK(batch.size() <= 10);
    all.insert(all.end(), batch.begin(), batch.end());
  }
  std::sort(all.begin(), all.end());
  CHECK(all == lake.ids());
}

TEST_CASE("negative selection worked example") {
  // Anchor 0 with positive 3; A, B, C, D sit at rows 1, 2, 4, 5.
  Matrix sim = Matrix::Zero(6, 6);
  auto set = [&](std::size_t i, std::size_t j, double v) { sim(i, j) = sim(j, i) = v; };
  set(0, 3, 0.99);
  set(0, 1, 0.95);
  set(0, 2, 0.92);
  set(0, 4, 0.80);
  set(0, 5, 0.30);
  std::vector<std::size_t> partner = {3, 4, 5, 0, 1, 2};
  std::vector<std::string> ids = {"t0", "tA", "tB", "t0", "tC", "tD"};
  NegativeSets ns = sample_negatives(sim, partner, ids, 0.9);
  CHECK(ns.latent_positives[0] == std::vector<std::size_t>{1, 2});
  CHECK(ns.hard_negatives[0] == std::vector<std::size_t>{4});
}

TEST_CASE("without latent positives half of the others are hard negatives") {
  Matrix sim = Matrix::Constant(6, 6, 0.5);
  sim(0, 3) = sim(3, 0) = 0.99;
  std::vector<std::size_t> partner = {3, 4, 5, 0, 1, 2};
  std::vector<std::string> ids = {"a", "b", "c", "a", "b", "c"};
  NegativeSets ns = sample_negatives(sim, partner, ids, 0.9);
  CHECK(ns.latent_positives[0].empty());
  CHECK(ns.hard_negatives[0].size() == 2);
  for (std::size_t j : ns.hard_negatives[0]) CHECK(j != 3);
  // Equal scores fall back to id order, then index order.
  CHECK(ns.hard_negatives[0] == std::vector<std::size_t>{1, 4});
}

TEST_CASE("negative selection matches a brute-force oracle") {
  std::mt19937_64 rng(99);
  const std::vector<double> levels = {0.1, 0.3, 0.5, 0.8, 0.9, 0.91, 0.95};
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t tables = 2 + rng() % 8;
    std::size_t n = 2 * tables;
    Matrix sim(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sim(i, j) = levels[rng() % levels.size()];
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < tables; ++i) ids[i] = ids[i + tables] = "id" + std::to_string(rng() % 5);
    auto partner = paired(tables);
    NegativeSets got = sample_negatives(sim, partner, ids, 0.9);
    NegativeSets want = oracle_negatives(sim, partner, ids, 0.9);
    CHECK(got.latent_positives == want.latent_positives);
    for (std::size_t i = 0; i < n; ++i) {
      auto g = got.hard_negatives[i];
      auto w = want.hard_negatives[i];
      std::sort(g.begin(), g.end());
      std::sort(w.begin(), w.end());
      CHECK(g == w);
      std::vector<std::size_t> both;
      std::sort(got.latent_positives[i].begin(), got.latent_positives[i].end());
      std::set_intersection(g.begin(), g.end(), got.latent_positives[i].begin(), got.latent_positives[i].end(),
                            std::back_inserter(both));
      CHECK(both.empty());
      CHECK(std::count(g.begin(), g.end(), i) == 0);
      CHECK(std::count(g.begin(), g.end(), partner[i]) == 0);
      std::size_t rest = n - 2 - got.latent_positives[i].size();
      CHECK(g.size() == (rest + 1) / 2);
    }
  }
}

TEST_CASE("InfoNCE with a tied negative is ln 2") {
  Matrix emb = Matrix::Zero(4, 3);
  emb.col(0).setOnes();
  auto partner = paired(2);
  NegativeSets ns;
  ns.latent_positives.resize(4);
  ns.hard_negatives = {{1}, {0}, {0}, {1}};
  LossResult r = infonce_loss(emb, partner, ns, 0.07);
  CHECK(std::abs(r.loss - std::log(2.0)) < 1e-9);
  CHECK(r.active_anchors == 4);

  // One active anchor out of four: its ln 2 is averaged over all 2N anchors.
  Matrix tilted(4, 2);
  tilted << 1, 0, 0.6, 0.8, 0.6, -0.8, 0, 1;
  NegativeSets one;
  one.latent_positives.resize(4);
  one.hard_negatives = {{1}, {}, {}, {}};
  LossResult r1 = infonce_loss(tilted, paired(2), one, 0.5);
  CHECK(r1.active_anchors == 1);
  CHECK(std::abs(r1.loss - std::log(2.0) / 4.0) < 1e-12);
}

TEST_CASE("InfoNCE high-margin case is near zero") {
  Matrix emb(4, 2);
  emb << 1, 0, 0, 1, 1, 0, 0, 1;
  NegativeSets ns;
  ns.latent_positives.resize(4);
  ns.hard_negatives = {{1}, {0}, {1}, {0}};
  const double tau = 0.07;
  LossResult r = infonce_loss(emb, paired(2), ns, tau);
  const double closed_form = std::log1p(std::exp(-1.0 / tau));
  CHECK(r.loss < 1e-5);
  CHECK(r.loss == doctest::Approx(closed_form).epsilon(1e-9));
  CHECK(closed_form == doctest::Approx(6.2e-7).epsilon(0.02));

  LossResult literal = infonce_loss(emb, paired(2), ns, tau, true);
  CHECK(literal.loss == doctest::Approx(-1.0 / tau).epsilon(1e-12));
}

TEST_CASE("InfoNCE embedding gradients match finite differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix emb = random_unit_rows(8, 5, rng);
    auto partner = paired(4);
    std::vector<std::string> ids = {"a", "b", "c", "d", "a", "b", "c", "d"};
    NegativeSets ns = sample_negatives(similarity_matrix(emb), partner, ids, 0.9);
    const double tau = 0.3;
    LossResult r = infonce_loss(emb, partner, ns, tau);
    double max_diff = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < emb.rows(); ++i)
      for (Eigen::Index j = 0; j < emb.cols(); ++j) {
        Matrix up = emb, down = emb;
        up(i, j) += 1e-5;
        down(i, j) -= 1e-5;
        double num = (infonce_loss(up, partner, ns, tau).loss - infonce_loss(down, partner, ns, tau).loss) / 2e-5;
        max_diff = std::max(max_diff, std::abs(num - r.grad(i, j)));
        scale = std::max({scale, std::abs(num), std::abs(r.grad(i, j))});
      }
    CHECK(max_diff / scale < 1e-3);
  }
}

TEST_CASE("InfoNCE is invariant to anchor order") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t tables = 2 + rng() % 5, n = 2 * tables;
    Matrix emb = random_unit_rows(n, 6, rng);
    auto partner = paired(tables);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < tables; ++i) ids[i] = ids[i + tables] = "t" + std::to_string(i);
    NegativeSets ns = sample_negatives(similarity_matrix(emb), partner, ids, 0.9);
    LossResult base = infonce_loss(emb, partner, ns, 0.07);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix pe(n, 6);
    std::vector<std::size_t> pp(n);
    NegativeSets pn;
    pn.latent_positives.resize(n);
    pn.hard_negatives.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pe.row(perm[i]) = emb.row(i);
      pp[perm[i]] = perm[partner[i]];
      for (std::size_t j : ns.hard_negatives[i]) pn.hard_negatives[perm[i]].push_back(perm[j]);
    }
    LossResult moved = infonce_loss(pe, pp, pn, 0.07);
    CHECK(moved.loss == doctest::Approx(base.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) CHECK(moved.grad(perm[i], j) == doctest::Approx(base.grad(i, j)).epsilon(1e-9));
  }
}

TEST_CASE("augment builds anchor and positive views of each table") {
  DataLake lake = numbered_lake(3);
  std::vector<const Table*> batch;
  for (const auto& [_, t] : lake) batch.push_back(&t);
  std::mt19937_64 rng(2);
  AugmentedBatch ab = augment(batch, rng, {});
  REQUIRE(ab.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ab.partner[ab.partner[i]] == i);
    CHECK(ab.tables[i].id == ab.tables[ab.partner[i]].id);
  }
}

TEST_CASE("zero epochs return the initialization") {
  DataLake lake = numbered_lake(4);
  EncoderParams init = EncoderParams::init(tiny_encoder());
  TrainConfig cfg;
  cfg.epochs = 0;
  TrainResult r = train(lake, init, cfg);
  CHECK(r.epoch_loss.empty());
  auto a = tensors(std::as_const(init));
  auto b = tensors(std::as_const(r.params));
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::equal(a[k].values.begin(), a[k].values.end(), b[k].values.begin()));
}

TEST_CASE("training lowers the loss and is reproducible") {
  SyntheticConfig sc;
  sc.clusters = 2;
  sc.tables_per_cluster = 4;
  sc.rows = 12;
  sc.cols = 4;
  DataLake lake = gen_synthetic_lake(sc).lake;
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  TrainResult a = train(lake, tiny_encoder(), cfg);
  REQUIRE(a.epoch_loss.size() == 10);
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());
  TrainResult b = train(lake, tiny_encoder(), cfg);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.params.token_embedding == b.params.token_embedding);
}

TEST_CASE("invalid training settings are rejected") {
  TrainConfig cfg;
  cfg.temperature = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  TrainConfig short_run;
  short_run.epochs = 1;
  EncoderParams broken = EncoderParams::init(tiny_encoder());
  broken.mlp_w2(0, 0) = std::nan("");
  CHECK_THROWS_AS(train(numbered_lake(8), broken, short_run), TrainingDiverged);
}
