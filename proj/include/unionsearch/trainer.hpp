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
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "unionsearch/encoder.hpp"
#include "unionsearch/serializer.hpp"
#include "unionsearch/table.hpp"

namespace unionsearch {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double temperature = 0.07;
  double latent_threshold = 0.9;
  std::uint64_t seed = 7;
  // Drop the positive term from the InfoNCE denominator.
  bool literal_denominator = false;
  PairConfig pairs;
  SerializerConfig serializer;

  void validate() const;
};

// Random partition of the lake ids into chunks of at most batch_size. A
// trailing singleton borrows one table from the previous chunk (or merges
// into it when that chunk has only two tables).
std::vector<std::vector<std::string>> build_batches(const DataLake& lake, std::size_t batch_size,
                                                    std::mt19937_64& rng);

// 2N tables: anchors at [0, N), their positives at [N, 2N).
struct AugmentedBatch {
  std::vector<Table> tables;
  std::vector<std::size_t> partner;
  Matrix embeddings;  // 2N x out_dim, unit rows

  std::size_t size() const { return tables.size(); }
};

AugmentedBatch augment(const std::vector<const Table*>& batch, std::mt19937_64& rng, const PairConfig& cfg);

struct NegativeSets {
  std::vector<std::vector<std::size_t>> latent_positives;
  std::vector<std::vector<std::size_t>> hard_negatives;
};

// Raw cosine matrix of unit-norm rows.
Matrix similarity_matrix(const Matrix& embeddings);

// Latent positives are batch members (other than the anchor and its partner)
// whose similarity exceeds `threshold`; the top ceil(|rest| / 2) of the
// remainder by similarity are the hard negatives. Ties go to the smaller
// table id, then the smaller batch index.
NegativeSets sample_negatives(const Matrix& similarity, std::span<const std::size_t> partner,
                              std::span<const std::string> ids, double threshold);
NegativeSets sample_negatives(const AugmentedBatch& batch, double threshold);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d embeddings, same shape as the embeddings
  std::size_t active_anchors = 0;
};

// Mean InfoNCE over all anchors; anchors without hard negatives add 0 but
// still count in the mean.
LossResult infonce_loss(const Matrix& embeddings, std::span<const std::size_t> partner,
                        const NegativeSets& negatives, double temperature, bool literal_denominator = false);

class AdamOptimizer {
 public:
  AdamOptimizer(const EncoderConfig& cfg, double lr, double beta1, double beta2, double eps);
  void step(EncoderParams& params, const EncoderParams& grads);
  std::size_t steps() const { return t_; }

 private:
  EncoderParams m_;
  EncoderParams v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct TrainResult {
  EncoderParams params;
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

TrainResult train(const DataLake& lake, EncoderParams init, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(const DataLake& lake, const EncoderConfig& encoder_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace unionsearch
