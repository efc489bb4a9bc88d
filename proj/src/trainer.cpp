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

#include "unionsearch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "unionsearch/error.hpp"
#include "unionsearch/hashing.hpp"

namespace unionsearch {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(latent_threshold > 0.0 && latent_threshold < 1.0)) throw ConfigError("latent threshold must be in (0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (serializer.budget < 1) throw ConfigError("serializer budget must be >= 1");
}

std::vector<std::vector<std::string>> build_batches(const DataLake& lake, std::size_t batch_size,
                                                    std::mt19937_64& rng) {
  if (lake.size() < 2) throw TooFewTables("training needs at least two tables");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  std::vector<std::string> ids = lake.ids();
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<std::string>> batches;
  for (std::size_t i = 0; i < ids.size(); i += batch_size) {
    std::size_t end = std::min(ids.size(), i + batch_size);
    batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(i), ids.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    auto& prev = batches[batches.size() - 2];
    if (prev.size() > 2) {
      batches.back().insert(batches.back().begin(), prev.back());
      prev.pop_back();
    } else {
      prev.push_back(batches.back().front());
      batches.pop_back();
    }
  }
  return batches;
}

AugmentedBatch augment(const std::vector<const Table*>& batch, std::mt19937_64& rng, const PairConfig& cfg) {
  const std::size_t n = batch.size();
  AugmentedBatch out;
  out.tables.resize(2 * n);
  out.partner.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    PositivePair pair = sample_positive(*batch[i], rng, cfg);
    out.tables[i] = std::move(pair.anchor);
    out.tables[n + i] = std::move(pair.positive);
    out.partner[i] = n + i;
    out.partner[n + i] = i;
  }
  return out;
}

Matrix similarity_matrix(const Matrix& embeddings) { return embeddings * embeddings.transpose(); }

NegativeSets sample_negatives(const Matrix& sim, std::span<const std::size_t> partner,
                              std::span<const std::string> ids, double threshold) {
  const std::size_t n = partner.size();
  if (static_cast<std::size_t>(sim.rows()) != n || ids.size() != n)
    throw PreconditionError("sample_negatives: batch size mismatch");
  NegativeSets out;
  out.latent_positives.resize(n);
  out.hard_negatives.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || j == partner[i]) continue;
      if (sim(i, j) > threshold) {
        out.latent_positives[i].push_back(j);
      } else {
        rest.push_back(j);
      }
    }
    std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      if (sim(i, a) != sim(i, b)) return sim(i, a) > sim(i, b);
      if (ids[a] != ids[b]) return ids[a] < ids[b];
      return a < b;
    });
    rest.resize((rest.size() + 1) / 2);
    out.hard_negatives[i] = std::move(rest);
  }
  return out;
}

NegativeSets sample_negatives(const AugmentedBatch& batch, double threshold) {
  std::vector<std::string> ids;
  ids.reserve(batch.size());
  for (const auto& t : batch.tables) ids.push_back(t.id);
  return sample_negatives(similarity_matrix(batch.embeddings), batch.partner, ids, threshold);
}

LossResult infonce_loss(const Matrix& emb, std::span<const std::size_t> partner, const NegativeSets& negatives,
                        double temperature, bool literal_denominator) {
  const std::size_t n = partner.size();
  LossResult r;
  r.grad = Matrix::Zero(emb.rows(), emb.cols());
  if (n == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& neg = negatives.hard_negatives[i];
    if (neg.empty()) continue;
    ++r.active_anchors;
    const std::size_t p = partner[i];
    const double pos_logit = emb.row(i).dot(emb.row(p)) / temperature;
    std::vector<double> logits;
    logits.reserve(neg.size() + 1);
    for (std::size_t j : neg) logits.push_back(emb.row(i).dot(emb.row(j)) / temperature);
    if (!literal_denominator) logits.push_back(pos_logit);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - mx);
    const double log_denom = mx + std::log(denom);
    r.loss += (log_denom - pos_logit) * inv_n;

    // d loss_i / d sim(i, j) = (softmax_j - [j is positive]) / temperature
    auto add_pair = [&](std::size_t j, double dsim) {
      double g = dsim * inv_n / temperature;
      r.grad.row(i) += g * emb.row(j);
      r.grad.row(j) += g * emb.row(i);
    };
    for (std::size_t k = 0; k < neg.size(); ++k) add_pair(neg[k], std::exp(logits[k] - log_denom));
    double pos_prob = literal_denominator ? 0.0 : std::exp(pos_logit - log_denom);
    add_pair(p, pos_prob - 1.0);
  }
  return r;
}

AdamOptimizer::AdamOptimizer(const EncoderConfig& cfg, double lr, double beta1, double beta2, double eps)
    : m_(EncoderParams::zeros(cfg)), v_(EncoderParams::zeros(cfg)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(EncoderParams& params, const EncoderParams& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(m_);
  auto v = tensors(v_);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].values.size(); ++i) {
      const double gi = g[k].values[i];
      double& mi = m[k].values[i];
      double& vi = v[k].values[i];
      mi = beta1_ * mi + (1.0 - beta1_) * gi;
      vi = beta2_ * vi + (1.0 - beta2_) * gi * gi;
      p[k].values[i] -= lr_ * (mi / c1) / (std::sqrt(vi / c2) + eps_);
    }
  }
}

TrainResult train(const DataLake& lake, EncoderParams params, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (lake.size() < 2) throw TooFewTables("training needs at least two tables");
  std::mt19937_64 rng(cfg.seed);
  AdamOptimizer adam(params.config, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  EncoderParams grads = EncoderParams::zeros(params.config);
  TrainResult result;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (const auto& ids : build_batches(lake, cfg.batch_size, rng)) {
      std::vector<const Table*> tables;
      for (const auto& id : ids) tables.push_back(&lake.at(id));
      AugmentedBatch batch = augment(tables, rng, cfg.pairs);

      SerializerConfig ser = cfg.serializer;
      ser.salt = hash_combine(cfg.seed, rng());
      std::vector<TokenSequence> seqs;
      seqs.reserve(batch.size());
      batch.embeddings.resize(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(params.config.out_dim));
      for (std::size_t i = 0; i < batch.size(); ++i) {
        seqs.push_back(serialize_table(batch.tables[i], ser));
        Encoding e = encode(seqs.back(), params);
        batch.embeddings.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(e.embedding.vec.data(), static_cast<Eigen::Index>(e.embedding.vec.size()));
      }

      NegativeSets negatives = sample_negatives(batch, cfg.latent_threshold);
      LossResult loss = infonce_loss(batch.embeddings, batch.partner, negatives, cfg.temperature, cfg.literal_denominator);
      if (!std::isfinite(loss.loss)) {
        std::ostringstream msg;
        msg << "loss is not finite at epoch " << epoch << " (learning rate " << cfg.learning_rate << " too high?)";
        throw TrainingDiverged(msg.str());
      }

      grads.set_zero();
      std::vector<double> g(params.config.out_dim);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto row = loss.grad.row(static_cast<Eigen::Index>(i));
        if (row.isZero(0.0)) continue;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = row(static_cast<Eigen::Index>(k));
        accumulate_gradients(seqs[i], params, g, grads);
      }
      adam.step(params, grads);
      if (!params.all_finite()) throw TrainingDiverged("parameters became non-finite at epoch " + std::to_string(epoch));

      loss_sum += loss.loss;
      ++n_batches;
    }
    double mean = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.params = std::move(params);
  return result;
}

TrainResult train(const DataLake& lake, const EncoderConfig& encoder_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  return train(lake, EncoderParams::init(encoder_cfg), cfg, on_epoch);
}

}  // namespace unionsearch
