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

#include "unionsearch/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "unionsearch/error.hpp"

namespace unionsearch {
namespace {

using RowVector = Eigen::RowVectorXd;

Matrix xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

void check_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols)
    throw ConfigError(std::string("parameter shape mismatch: ") + name);
}

void check_shape(const Vector& v, std::size_t n, const char* name) {
  if (static_cast<std::size_t>(v.size()) != n)
    throw ConfigError(std::string("parameter shape mismatch: ") + name);
}

void check_params(const EncoderParams& p) {
  const auto& c = p.config;
  c.validate();
  check_shape(p.token_embedding, c.vocab_buckets, c.dim, "token_embedding");
  if (p.layers.size() != c.layers) throw ConfigError("parameter shape mismatch: layers");
  for (const auto& l : p.layers) {
    check_shape(l.wq, c.dim, c.dim, "wq");
    check_shape(l.wk, c.dim, c.dim, "wk");
    check_shape(l.wv, c.dim, c.dim, "wv");
    check_shape(l.wo, c.dim, c.dim, "wo");
    check_shape(l.segment_bias, c.heads, "segment_bias");
    check_shape(l.ffn_w1, c.dim, c.ffn_dim, "ffn_w1");
    check_shape(l.ffn_b1, c.ffn_dim, "ffn_b1");
    check_shape(l.ffn_w2, c.ffn_dim, c.dim, "ffn_w2");
    check_shape(l.ffn_b2, c.dim, "ffn_b2");
  }
  check_shape(p.pool_query, c.heads, c.head_dim(), "pool_query");
  check_shape(p.pool_wk, c.dim, c.dim, "pool_wk");
  check_shape(p.pool_wv, c.dim, c.dim, "pool_wv");
  check_shape(p.mlp_w1, c.dim, c.mlp_hidden, "mlp_w1");
  check_shape(p.mlp_b1, c.mlp_hidden, "mlp_b1");
  check_shape(p.mlp_w2, c.mlp_hidden, c.out_dim, "mlp_w2");
  check_shape(p.mlp_b2, c.out_dim, "mlp_b2");
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    auto row = s.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

Vector softmax(const Vector& s) {
  Vector e = (s.array() - s.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Matrix positional_table(std::size_t n, std::size_t d) {
  Matrix pe(n, d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return pe;
}

struct LayerCache {
  Matrix x;                 // input
  Matrix q, k, v;           // n x d
  std::vector<Matrix> attn;  // per head, n x n
  Matrix o;                 // concatenated head outputs
  Matrix y;                 // x + o wo
  Matrix pre;               // y w1 + b1
  Matrix hidden;            // relu(pre)
  Matrix out;               // y + hidden w2 + b2
};

struct ForwardCache {
  std::vector<std::size_t> buckets;
  Matrix same_segment;  // 1 where tokens share a column segment
  std::vector<LayerCache> layers;
  Matrix columns;  // m x d
  Matrix pool_k, pool_v;
  std::vector<Vector> pool_attn;  // per head, length m
  Vector z;
  Vector mlp_pre;
  Vector mlp_hidden;
  Vector raw;  // pre-normalization output
  double norm = 0.0;
  Vector out;
};

ForwardCache forward(const TokenSequence& seq, const EncoderParams& p) {
  check_params(p);
  if (seq.empty() || seq.cls_positions.empty()) throw PreconditionError("encode: empty token sequence");
  const auto& cfg = p.config;
  const auto n = static_cast<Eigen::Index>(seq.size());
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto dk = static_cast<Eigen::Index>(cfg.head_dim());
  const auto heads = static_cast<Eigen::Index>(cfg.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  ForwardCache c;
  c.buckets.resize(seq.size());
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    c.buckets[i] = token_bucket(seq.tokens[i], cfg.vocab_buckets);
    x.row(i) = p.token_embedding.row(static_cast<Eigen::Index>(c.buckets[i]));
  }
  if (cfg.positional) x += positional_table(seq.size(), cfg.dim);

  std::vector<std::size_t> segment(seq.size(), 0);
  for (std::size_t s = 0; s < seq.cls_positions.size(); ++s) {
    std::size_t end = s + 1 < seq.cls_positions.size() ? seq.cls_positions[s + 1] : seq.size();
    for (std::size_t i = seq.cls_positions[s]; i < end; ++i) segment[i] = s;
  }
  c.same_segment.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c.same_segment(i, j) = segment[i] == segment[j] ? 1.0 : 0.0;

  for (const auto& layer : p.layers) {
    LayerCache lc;
    lc.x = x;
    lc.q = x * layer.wq;
    lc.k = x * layer.wk;
    lc.v = x * layer.wv;
    lc.o.resize(n, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      Matrix s = lc.q.middleCols(h * dk, dk) * lc.k.middleCols(h * dk, dk).transpose() * scale;
      s += layer.segment_bias(h) * c.same_segment;
      softmax_rows(s);
      lc.o.middleCols(h * dk, dk) = s * lc.v.middleCols(h * dk, dk);
      lc.attn.push_back(std::move(s));
    }
    lc.y = x + lc.o * layer.wo;
    lc.pre = lc.y * layer.ffn_w1;
    lc.pre.rowwise() += layer.ffn_b1.transpose();
    lc.hidden = lc.pre.cwiseMax(0.0);
    Matrix ffn = lc.hidden * layer.ffn_w2;
    ffn.rowwise() += layer.ffn_b2.transpose();
    lc.out = lc.y + ffn;
    x = lc.out;
    c.layers.push_back(std::move(lc));
  }

  const auto m = static_cast<Eigen::Index>(seq.cls_positions.size());
  c.columns.resize(m, d);
  for (Eigen::Index j = 0; j < m; ++j) c.columns.row(j) = x.row(static_cast<Eigen::Index>(seq.cls_positions[j]));

  // Learnable-query attention over the column states.
  c.pool_k = c.columns * p.pool_wk;
  c.pool_v = c.columns * p.pool_wv;
  c.z.resize(d);
  for (Eigen::Index h = 0; h < heads; ++h) {
    Vector logits = c.pool_k.middleCols(h * dk, dk) * p.pool_query.row(h).transpose() * scale;
    Vector a = softmax(logits);
    c.z.segment(h * dk, dk) = c.pool_v.middleCols(h * dk, dk).transpose() * a;
    c.pool_attn.push_back(std::move(a));
  }

  c.mlp_pre = p.mlp_w1.transpose() * c.z + p.mlp_b1;
  c.mlp_hidden = c.mlp_pre.cwiseMax(0.0);
  c.raw = p.mlp_w2.transpose() * c.mlp_hidden + p.mlp_b2;
  c.norm = c.raw.norm();
  if (!(c.norm > 0.0) || !std::isfinite(c.norm)) {
    // Degenerate output; fall back to the first basis vector so the result
    // stays unit-norm.
    c.out = Vector::Zero(c.raw.size());
    c.out(0) = 1.0;
  } else {
    c.out = c.raw / c.norm;
  }
  return c;
}

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_buckets < 2) throw ConfigError("vocab_buckets must be >= 2");
  if (dim == 0 || heads == 0 || dim % heads != 0) throw ConfigError("dim must be a positive multiple of heads");
  if (ffn_dim == 0 || mlp_hidden == 0 || out_dim == 0) throw ConfigError("hidden sizes must be positive");
}

std::size_t token_bucket(TokenId id, std::size_t vocab_buckets) {
  if (id == kClsToken) return 0;
  return 1 + static_cast<std::size_t>(id % (vocab_buckets - 1));
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p;
  p.config = cfg;
  const auto d = cfg.dim;
  p.token_embedding = Matrix::Zero(cfg.vocab_buckets, d);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    LayerParams lp;
    lp.wq = Matrix::Zero(d, d);
    lp.wk = Matrix::Zero(d, d);
    lp.wv = Matrix::Zero(d, d);
    lp.wo = Matrix::Zero(d, d);
    lp.segment_bias = Vector::Zero(cfg.heads);
    lp.ffn_w1 = Matrix::Zero(d, cfg.ffn_dim);
    lp.ffn_b1 = Vector::Zero(cfg.ffn_dim);
    lp.ffn_w2 = Matrix::Zero(cfg.ffn_dim, d);
    lp.ffn_b2 = Vector::Zero(d);
    p.layers.push_back(std::move(lp));
  }
  p.pool_query = Matrix::Zero(cfg.heads, cfg.head_dim());
  p.pool_wk = Matrix::Zero(d, d);
  p.pool_wv = Matrix::Zero(d, d);
  p.mlp_w1 = Matrix::Zero(d, cfg.mlp_hidden);
  p.mlp_b1 = Vector::Zero(cfg.mlp_hidden);
  p.mlp_w2 = Matrix::Zero(cfg.mlp_hidden, cfg.out_dim);
  p.mlp_b2 = Vector::Zero(cfg.out_dim);
  return p;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg) {
  EncoderParams p = zeros(cfg);
  std::mt19937_64 rng(cfg.seed);
  const auto d = cfg.dim;
  std::normal_distribution<double> normal(0.0, 0.02);
  for (Eigen::Index i = 0; i < p.token_embedding.size(); ++i) p.token_embedding.data()[i] = normal(rng);
  // [CLS] starts at zero: column states begin as pure context.
  p.token_embedding.row(0).setZero();
  for (auto& lp : p.layers) {
    lp.wq = xavier(d, d, rng);
    lp.wk = xavier(d, d, rng);
    lp.wv = xavier(d, d, rng);
    lp.wo = xavier(d, d, rng);
    // Delimiters start out leaning toward their own column.
    lp.segment_bias.setOnes();
    lp.ffn_w1 = xavier(d, cfg.ffn_dim, rng);
    lp.ffn_w2 = xavier(cfg.ffn_dim, d, rng);
  }
  p.pool_query = xavier(cfg.heads, cfg.head_dim(), rng);
  p.pool_wk = xavier(d, d, rng);
  p.pool_wv = xavier(d, d, rng);
  p.mlp_w1 = xavier(d, cfg.mlp_hidden, rng);
  p.mlp_w2 = xavier(cfg.mlp_hidden, cfg.out_dim, rng);
  return p;
}

std::vector<TensorView> tensors(EncoderParams& p) {
  std::vector<TensorView> out;
  auto add = [&out](std::string name, auto& t) {
    out.push_back({std::move(name), static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.cols()),
                   std::span<double>(t.data(), static_cast<std::size_t>(t.size()))});
  };
  add("token_embedding", p.token_embedding);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& lp = p.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    add(prefix + "wq", lp.wq);
    add(prefix + "wk", lp.wk);
    add(prefix + "wv", lp.wv);
    add(prefix + "wo", lp.wo);
    add(prefix + "segment_bias", lp.segment_bias);
    add(prefix + "ffn_w1", lp.ffn_w1);
    add(prefix + "ffn_b1", lp.ffn_b1);
    add(prefix + "ffn_w2", lp.ffn_w2);
    add(prefix + "ffn_b2", lp.ffn_b2);
  }
  add("pool_query", p.pool_query);
  add("pool_wk", p.pool_wk);
  add("pool_wv", p.pool_wv);
  add("mlp_w1", p.mlp_w1);
  add("mlp_b1", p.mlp_b1);
  add("mlp_w2", p.mlp_w2);
  add("mlp_b2", p.mlp_b2);
  return out;
}

std::vector<ConstTensorView> tensors(const EncoderParams& p) {
  std::vector<ConstTensorView> out;
  for (auto& t : tensors(const_cast<EncoderParams&>(p))) out.push_back({t.name, t.rows, t.cols, t.values});
  return out;
}

bool EncoderParams::all_finite() const {
  for (const auto& t : tensors(*this))
    for (double v : t.values)
      if (!std::isfinite(v)) return false;
  return true;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors(*this)) n += t.values.size();
  return n;
}

void EncoderParams::set_zero() {
  for (auto& t : tensors(*this)) std::fill(t.values.begin(), t.values.end(), 0.0);
}

void EncoderParams::round_to_float() {
  for (auto& t : tensors(*this))
    for (double& v : t.values) v = static_cast<double>(static_cast<float>(v));
}

Encoding encode(const TokenSequence& seq, const EncoderParams& params, std::string table_id) {
  ForwardCache c = forward(seq, params);
  Encoding e;
  e.embedding.table_id = std::move(table_id);
  e.embedding.vec.assign(c.out.data(), c.out.data() + c.out.size());
  e.context.columns = std::move(c.columns);
  return e;
}

void accumulate_gradients(const TokenSequence& seq, const EncoderParams& p, std::span<const double> grad_out,
                          EncoderParams& g) {
  const auto& cfg = p.config;
  if (grad_out.size() != cfg.out_dim) throw ConfigError("grad_out dimension mismatch");
  ForwardCache c = forward(seq, p);
  if (!(c.norm > 0.0) || !std::isfinite(c.norm)) return;

  const auto n = static_cast<Eigen::Index>(seq.size());
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto dk = static_cast<Eigen::Index>(cfg.head_dim());
  const auto heads = static_cast<Eigen::Index>(cfg.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Eigen::Map<const Vector> gout(grad_out.data(), static_cast<Eigen::Index>(grad_out.size()));
  // out = raw / |raw|
  Vector d_raw = (gout - c.out * c.out.dot(gout)) / c.norm;

  g.mlp_w2.noalias() += c.mlp_hidden * d_raw.transpose();
  g.mlp_b2 += d_raw;
  Vector d_hidden = p.mlp_w2 * d_raw;
  Vector d_pre = d_hidden.cwiseProduct((c.mlp_pre.array() > 0.0).cast<double>().matrix());
  g.mlp_w1.noalias() += c.z * d_pre.transpose();
  g.mlp_b1 += d_pre;
  Vector d_z = p.mlp_w1 * d_pre;

  const auto m = c.columns.rows();
  Matrix d_pool_k = Matrix::Zero(m, d);
  Matrix d_pool_v = Matrix::Zero(m, d);
  for (Eigen::Index h = 0; h < heads; ++h) {
    const Vector& a = c.pool_attn[h];
    Vector dz_h = d_z.segment(h * dk, dk);
    d_pool_v.middleCols(h * dk, dk) = a * dz_h.transpose();
    Vector da = c.pool_v.middleCols(h * dk, dk) * dz_h;
    Vector ds = a.cwiseProduct((da.array() - a.dot(da)).matrix());
    d_pool_k.middleCols(h * dk, dk) = ds * p.pool_query.row(h) * scale;
    g.pool_query.row(h) += (c.pool_k.middleCols(h * dk, dk).transpose() * ds).transpose() * scale;
  }
  g.pool_wk.noalias() += c.columns.transpose() * d_pool_k;
  g.pool_wv.noalias() += c.columns.transpose() * d_pool_v;
  Matrix d_columns = d_pool_k * p.pool_wk.transpose() + d_pool_v * p.pool_wv.transpose();

  Matrix dx = Matrix::Zero(n, d);
  for (Eigen::Index j = 0; j < m; ++j) dx.row(static_cast<Eigen::Index>(seq.cls_positions[j])) += d_columns.row(j);

  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const LayerParams& lp = p.layers[li];
    LayerParams& lg = g.layers[li];
    const LayerCache& lc = c.layers[li];

    // out = y + relu(y w1 + b1) w2 + b2
    lg.ffn_w2.noalias() += lc.hidden.transpose() * dx;
    lg.ffn_b2 += dx.colwise().sum().transpose();
    Matrix d_pre = (dx * lp.ffn_w2.transpose()).cwiseProduct((lc.pre.array() > 0.0).cast<double>().matrix());
    lg.ffn_w1.noalias() += lc.y.transpose() * d_pre;
    lg.ffn_b1 += d_pre.colwise().sum().transpose();
    Matrix dy = dx + d_pre * lp.ffn_w1.transpose();

    // y = x + o wo
    lg.wo.noalias() += lc.o.transpose() * dy;
    Matrix d_o = dy * lp.wo.transpose();
    Matrix d_in = dy;
    Matrix dq(n, d), dkm(n, d), dv(n, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Matrix& a = lc.attn[h];
      Matrix d_oh = d_o.middleCols(h * dk, dk);
      Matrix da = d_oh * lc.v.middleCols(h * dk, dk).transpose();
      dv.middleCols(h * dk, dk) = a.transpose() * d_oh;
      Vector row_dot = (da.cwiseProduct(a)).rowwise().sum();
      Matrix ds = a.cwiseProduct(da - row_dot.replicate(1, n));
      lg.segment_bias(h) += ds.cwiseProduct(c.same_segment).sum();
      dq.middleCols(h * dk, dk) = ds * lc.k.middleCols(h * dk, dk) * scale;
      dkm.middleCols(h * dk, dk) = ds.transpose() * lc.q.middleCols(h * dk, dk) * scale;
    }
    lg.wq.noalias() += lc.x.transpose() * dq;
    lg.wk.noalias() += lc.x.transpose() * dkm;
    lg.wv.noalias() += lc.x.transpose() * dv;
    d_in.noalias() += dq * lp.wq.transpose() + dkm * lp.wk.transpose() + dv * lp.wv.transpose();
    dx = std::move(d_in);
  }

  for (Eigen::Index i = 0; i < n; ++i) g.token_embedding.row(static_cast<Eigen::Index>(c.buckets[i])) += dx.row(i);
}

EncoderParams backward(const TokenSequence& seq, const EncoderParams& params, std::span<const double> grad_out) {
  EncoderParams g = EncoderParams::zeros(params.config);
  accumulate_gradients(seq, params, grad_out, g);
  return g;
}

double unionability(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("unionability: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, 0.0, 1.0);
}

double unionability(const TableEmbedding& a, const TableEmbedding& b) { return unionability(a.vec, b.vec); }

}  // namespace unionsearch
