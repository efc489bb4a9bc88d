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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unionsearch/serializer.hpp"

namespace unionsearch {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct EncoderConfig {
  std::size_t vocab_buckets = 1u << 16;
  std::size_t dim = 64;
  std::size_t layers = 1;
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t mlp_hidden = 128;
  std::size_t out_dim = 64;
  bool positional = false;
  std::uint64_t seed = 42;

  std::size_t head_dim() const { return dim / heads; }
  // Throws ConfigError.
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

// One self-attention block. Heads occupy consecutive column blocks of the
// d x d projections. segment_bias[h] is added to attention logits between
// tokens of the same column segment.
struct LayerParams {
  Matrix wq, wk, wv, wo;
  Vector segment_bias;
  Matrix ffn_w1;
  Vector ffn_b1;
  Matrix ffn_w2;
  Vector ffn_b2;
};

struct EncoderParams {
  EncoderConfig config;
  Matrix token_embedding;  // vocab_buckets x dim, row 0 is [CLS]
  std::vector<LayerParams> layers;
  Matrix pool_query;  // heads x head_dim
  Matrix pool_wk;     // dim x dim
  Matrix pool_wv;     // dim x dim
  Matrix mlp_w1;      // dim x mlp_hidden
  Vector mlp_b1;
  Matrix mlp_w2;      // mlp_hidden x out_dim
  Vector mlp_b2;

  // Xavier-uniform projections, N(0, 0.02) token embeddings, zero biases.
  static EncoderParams init(const EncoderConfig& cfg);
  static EncoderParams zeros(const EncoderConfig& cfg);

  bool all_finite() const;
  std::size_t parameter_count() const;
  void set_zero();
  // Rounds every entry through float32, matching what a checkpoint holds.
  void round_to_float();
};

struct TensorView {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> values;
};

struct ConstTensorView {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> values;
};

// Stable tensor order used by the optimizer, gradient checks and checkpoints.
std::vector<TensorView> tensors(EncoderParams& params);
std::vector<ConstTensorView> tensors(const EncoderParams& params);

struct TableEmbedding {
  std::string table_id;
  std::vector<double> vec;
};

// Final-layer hidden state at each [CLS] position, one row per column.
struct ColumnContext {
  Matrix columns;
  std::size_t count() const { return static_cast<std::size_t>(columns.rows()); }
};

struct Encoding {
  TableEmbedding embedding;
  ColumnContext context;
};

Encoding encode(const TokenSequence& seq, const EncoderParams& params, std::string table_id = {});

// Adds d(grad_out . encode(seq))/d(params) into `grads`.
void accumulate_gradients(const TokenSequence& seq, const EncoderParams& params,
                          std::span<const double> grad_out, EncoderParams& grads);

EncoderParams backward(const TokenSequence& seq, const EncoderParams& params,
                       std::span<const double> grad_out);

// Cosine of two unit vectors clamped to [0, 1].
double unionability(std::span<const double> a, std::span<const double> b);
double unionability(const TableEmbedding& a, const TableEmbedding& b);

std::size_t token_bucket(TokenId id, std::size_t vocab_buckets);

}  // namespace unionsearch
