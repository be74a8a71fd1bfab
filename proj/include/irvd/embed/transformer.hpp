// Copyright 2026 The irvd Authors. All Rights Reserved.
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

// GPT-2 style decoder-only transformer with explicit forward and backward
// passes.
//
// Layout: token + learned position embeddings, then pre-norm blocks
//   x = x + Dropout(Attn(LN1(x)))
//   x = x + Dropout(MLP(LN2(x)))     MLP = Linear -> GELU(tanh) -> Linear
// and a final LayerNorm. The language-model head shares the token embedding
// matrix. Attention is strictly causal: position i reads positions <= i only.

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/nn/tensor.hpp"
#include "irvd/random.hpp"
#include "irvd/tokenizer/bpe.hpp"

namespace irvd::embed {

using nn::Mat;
using nn::Param;
using nn::ParamList;
using tokenizer::TokenId;

struct TransformerConfig {
  int n_layers = 12;
  int d_model = 100;
  int n_heads = 10;
  int d_ff = 400;
  int max_positions = 2048;
  int vocab_size = 8192;
  double dropout = 0.1;
  // Which hidden state embed() returns: -1 for the final (normed) layer,
  // k in [0, n_layers) for the residual stream after block k.
  int embed_layer = -1;

  int d_head() const { return d_model / n_heads; }

  void validate() const {
    if (n_layers < 1 || d_model < 1 || n_heads < 1 || d_ff < 1 || max_positions < 1 || vocab_size < 1) {
      throw Error(ErrorKind::kConfigInvalid, "transformer dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
      throw Error(ErrorKind::kConfigInvalid, "d_model must be divisible by n_heads");
    }
    if (dropout < 0 || dropout >= 1) throw Error(ErrorKind::kConfigInvalid, "dropout must be in [0,1)");
    if (embed_layer < -1 || embed_layer >= n_layers) {
      throw Error(ErrorKind::kConfigInvalid, "embed_layer out of range");
    }
  }

  bool operator==(const TransformerConfig&) const = default;
};

inline nlohmann::json to_json(const TransformerConfig& c) {
  return {{"n_layers", c.n_layers},     {"d_model", c.d_model},       {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},             {"max_positions", c.max_positions},
          {"vocab_size", c.vocab_size}, {"dropout", c.dropout},       {"embed_layer", c.embed_layer}};
}

inline TransformerConfig transformer_config_from_json(const nlohmann::json& j,
                                                      TransformerConfig c = {}) {
  c.n_layers = j.value("n_layers", c.n_layers);
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", 4 * c.d_model);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.dropout = j.value("dropout", c.dropout);
  c.embed_layer = j.value("embed_layer", c.embed_layer);
  return c;
}

namespace detail {

template <typename T>
struct LayerNormCache {
  Mat<T> xhat;
  std::vector<T> rstd;
};

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, const Mat<T>& g, const Mat<T>& b, LayerNormCache<T>* cache) {
  constexpr T kEps = T(1e-5);
  const Eigen::Index n = x.cols();
  Mat<T> xhat(x.rows(), n);
  std::vector<T> rstd(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    T mean = x.row(r).mean();
    auto centered = x.row(r).array() - mean;
    T var = centered.square().mean();
    T rs = T(1) / std::sqrt(var + kEps);
    xhat.row(r) = centered * rs;
    rstd[static_cast<std::size_t>(r)] = rs;
  }
  Mat<T> y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const LayerNormCache<T>& c, Param<T>& g, Param<T>& b) {
  const auto n = static_cast<T>(dy.cols());
  g.grad.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  b.grad.row(0) += dy.colwise().sum();
  Mat<T> dxhat = dy.array().rowwise() * g.value.row(0).array();
  Mat<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    T s1 = dxhat.row(r).sum();
    T s2 = dxhat.row(r).dot(c.xhat.row(r));
    dx.row(r) = (n * dxhat.row(r).array() - s1 - c.xhat.row(r).array() * s2) *
                (c.rstd[static_cast<std::size_t>(r)] / n);
  }
  return dx;
}

template <typename T>
inline T gelu(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  return T(0.5) * x * (T(1) + std::tanh(k * (x + T(0.044715) * x * x * x)));
}

template <typename T>
inline T gelu_grad(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  T u = k * (x + T(0.044715) * x * x * x);
  T th = std::tanh(u);
  T du = k * (T(1) + T(3) * T(0.044715) * x * x);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
}

}  // namespace detail

template <typename T>
class Transformer {
 public:
  struct Block {
    Param<T> ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
  };

  struct BlockCache {
    Mat<T> x_in;
    detail::LayerNormCache<T> ln1;
    Mat<T> a;
    Mat<T> qkv;
    std::vector<Mat<T>> probs;  // per head, T x T, zero above the diagonal
    Mat<T> heads;               // concatenated head outputs
    Mat<T> drop1;
    Mat<T> x_mid;
    detail::LayerNormCache<T> ln2;
    Mat<T> m;
    Mat<T> fc_pre;
    Mat<T> fc_act;
    Mat<T> drop2;
  };

  struct Cache {
    std::vector<TokenId> ids;
    Mat<T> drop0;
    std::vector<BlockCache> blocks;
    detail::LayerNormCache<T> lnf;
    int layer = -1;  // which hidden state forward() returned
  };

  Transformer() = default;

  Transformer(const TransformerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    allocate();
    Rng rng(seed);
    constexpr double kStd = 0.02;
    nn::init_normal(wte_.value, rng, kStd);
    nn::init_normal(wpe_.value, rng, kStd);
    for (auto& b : blocks_) {
      b.ln1_g.value.setOnes();
      b.ln2_g.value.setOnes();
      nn::init_normal(b.w_qkv.value, rng, kStd);
      nn::init_normal(b.w_o.value, rng, kStd);
      nn::init_normal(b.w_fc.value, rng, kStd);
      nn::init_normal(b.w_proj.value, rng, kStd);
    }
    lnf_g_.value.setOnes();
  }

  // Zero-initialized weights with the right shapes; used when loading.
  static Transformer shaped(const TransformerConfig& cfg) {
    Transformer t;
    t.cfg_ = cfg;
    t.cfg_.validate();
    t.allocate();
    return t;
  }

  const TransformerConfig& config() const { return cfg_; }
  TransformerConfig& mutable_config() { return cfg_; }

  ParamList<T> params() {
    ParamList<T> ps{&wte_, &wpe_};
    for (auto& b : blocks_) {
      for (auto* p : {&b.ln1_g, &b.ln1_b, &b.w_qkv, &b.b_qkv, &b.w_o, &b.b_o, &b.ln2_g, &b.ln2_b,
                      &b.w_fc, &b.b_fc, &b.w_proj, &b.b_proj}) {
        ps.push_back(p);
      }
    }
    ps.push_back(&lnf_g_);
    ps.push_back(&lnf_b_);
    return ps;
  }

  ParamList<T> params() const { return const_cast<Transformer*>(this)->params(); }

  const Mat<T>& token_embedding() const { return wte_.value; }

  // Hidden states (len(ids) x d_model) at `layer` (see embed_layer). With a
  // cache, everything needed by backward() is kept. With `dropout_rng` and a
  // positive dropout rate the pass runs in training mode.
  Mat<T> forward(std::span<const TokenId> ids, Cache* cache = nullptr, Rng* dropout_rng = nullptr,
                 int layer = -2) const {
    if (layer == -2) layer = cfg_.embed_layer;
    const auto len = static_cast<Eigen::Index>(ids.size());
    if (len > cfg_.max_positions) {
      throw Error(ErrorKind::kSequenceTooLong,
                  std::to_string(len) + " tokens > max_positions " + std::to_string(cfg_.max_positions));
    }
    const int d = cfg_.d_model;
    const bool train = dropout_rng != nullptr && cfg_.dropout > 0;
    Mat<T> x(len, d);
    for (Eigen::Index t = 0; t < len; ++t) {
      auto id = ids[static_cast<std::size_t>(t)];
      if (id < 0 || id >= cfg_.vocab_size) throw Error(ErrorKind::kUnknownId, "token id " + std::to_string(id));
      x.row(t) = wte_.value.row(id) + wpe_.value.row(t);
    }
    if (cache != nullptr) {
      cache->ids.assign(ids.begin(), ids.end());
      cache->blocks.clear();
      cache->layer = layer;
    }
    if (train) {
      Mat<T> mask = nn::dropout_mask<T>(len, d, cfg_.dropout, *dropout_rng);
      x = x.cwiseProduct(mask);
      if (cache != nullptr) cache->drop0 = std::move(mask);
    } else if (cache != nullptr) {
      cache->drop0.resize(0, 0);
    }

    const int last_block = layer < 0 ? cfg_.n_layers - 1 : layer;
    for (int l = 0; l <= last_block; ++l) {
      BlockCache* bc = nullptr;
      if (cache != nullptr) {
        cache->blocks.emplace_back();
        bc = &cache->blocks.back();
      }
      x = block_forward(blocks_[static_cast<std::size_t>(l)], x, bc, train ? dropout_rng : nullptr);
    }
    if (layer >= 0) return x;
    return detail::layer_norm(x, lnf_g_.value, lnf_b_.value, cache != nullptr ? &cache->lnf : nullptr);
  }

  // Evaluation-mode embedding of a token sequence.
  Mat<T> embed(std::span<const TokenId> ids) const { return forward(ids); }

  Mat<T> logits(const Mat<T>& hidden) const { return hidden * wte_.value.transpose(); }

  // Accumulates parameter gradients given dLoss/dHidden for the hidden
  // states returned by forward(). Returns dLoss/d(input embedding) per
  // position (the summed token + position vector before dropout).
  Mat<T> backward(const Cache& cache, const Mat<T>& d_hidden) {
    Mat<T> dx = d_hidden;
    if (cache.layer < 0) dx = detail::layer_norm_backward(dx, cache.lnf, lnf_g_, lnf_b_);
    for (int l = static_cast<int>(cache.blocks.size()) - 1; l >= 0; --l) {
      dx = block_backward(blocks_[static_cast<std::size_t>(l)], cache.blocks[static_cast<std::size_t>(l)], dx);
    }
    if (cache.drop0.size() != 0) dx = dx.cwiseProduct(cache.drop0);
    for (Eigen::Index t = 0; t < dx.rows(); ++t) {
      wte_.grad.row(cache.ids[static_cast<std::size_t>(t)]) += dx.row(t);
      wpe_.grad.row(t) += dx.row(t);
    }
    return dx;
  }

  struct LossResult {
    double loss_sum = 0;  // summed over predicted positions
    std::size_t count = 0;
  };

  // Next-token cross-entropy over positions 0..n-2 of `ids`. When
  // `grad_scale` is non-zero, gradients of (grad_scale * loss_sum) are
  // accumulated into the parameters.
  LossResult clm_loss(std::span<const TokenId> ids, double grad_scale = 0.0, Rng* dropout_rng = nullptr) {
    LossResult r;
    if (ids.size() < 2) return r;
    Cache cache;
    const bool need_grad = grad_scale != 0.0;
    Mat<T> hidden = forward(ids, need_grad ? &cache : nullptr, dropout_rng, -1);
    const Eigen::Index n = hidden.rows() - 1;
    Mat<T> lg = hidden.topRows(n) * wte_.value.transpose();
    Mat<T> dlogits;
    if (need_grad) dlogits.resize(n, lg.cols());
    for (Eigen::Index t = 0; t < n; ++t) {
      auto target = ids[static_cast<std::size_t>(t + 1)];
      T mx = lg.row(t).maxCoeff();
      auto ex = (lg.row(t).array() - mx).exp();
      T sum = ex.sum();
      r.loss_sum += static_cast<double>(std::log(sum) + mx - lg(t, target));
      if (need_grad) {
        dlogits.row(t) = ex / sum;
        dlogits(t, target) -= T(1);
      }
    }
    r.count = static_cast<std::size_t>(n);
    if (need_grad) {
      dlogits *= static_cast<T>(grad_scale);
      wte_.grad += dlogits.transpose() * hidden.topRows(n);
      Mat<T> dh = Mat<T>::Zero(hidden.rows(), hidden.cols());
      dh.topRows(n) = dlogits * wte_.value;
      backward(cache, dh);
    }
    return r;
  }

 private:
  void allocate() {
    const int d = cfg_.d_model, f = cfg_.d_ff;
    wte_ = Param<T>("wte", cfg_.vocab_size, d);
    wpe_ = Param<T>("wpe", cfg_.max_positions, d);
    blocks_.clear();
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const std::string p = "h." + std::to_string(l) + ".";
      Block b{Param<T>(p + "ln_1.g", 1, d),        Param<T>(p + "ln_1.b", 1, d),
              Param<T>(p + "attn.c_attn.w", d, 3 * d), Param<T>(p + "attn.c_attn.b", 1, 3 * d),
              Param<T>(p + "attn.c_proj.w", d, d), Param<T>(p + "attn.c_proj.b", 1, d),
              Param<T>(p + "ln_2.g", 1, d),        Param<T>(p + "ln_2.b", 1, d),
              Param<T>(p + "mlp.c_fc.w", d, f),    Param<T>(p + "mlp.c_fc.b", 1, f),
              Param<T>(p + "mlp.c_proj.w", f, d),  Param<T>(p + "mlp.c_proj.b", 1, d)};
      blocks_.push_back(std::move(b));
    }
    lnf_g_ = Param<T>("ln_f.g", 1, d);
    lnf_b_ = Param<T>("ln_f.b", 1, d);
  }

  Mat<T> block_forward(const Block& b, const Mat<T>& x, BlockCache* c, Rng* rng) const {
    const Eigen::Index len = x.rows();
    const int d = cfg_.d_model, nh = cfg_.n_heads, dh = cfg_.d_head();
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    Mat<T> a = detail::layer_norm(x, b.ln1_g.value, b.ln1_b.value, c != nullptr ? &c->ln1 : nullptr);
    Mat<T> qkv = a * b.w_qkv.value;
    qkv.rowwise() += b.b_qkv.value.row(0);
    Mat<T> heads(len, d);
    if (c != nullptr) c->probs.resize(static_cast<std::size_t>(nh));
    for (int h = 0; h < nh; ++h) {
      auto q = qkv.middleCols(h * dh, dh);
      auto k = qkv.middleCols(d + h * dh, dh);
      auto v = qkv.middleCols(2 * d + h * dh, dh);
      Mat<T> p = Mat<T>::Zero(len, len);
      for (Eigen::Index i = 0; i < len; ++i) {
        // Row i only ever sees keys 0..i.
        auto s = (k.topRows(i + 1) * q.row(i).transpose()).transpose() * scale;
        T mx = s.maxCoeff();
        auto e = (s.array() - mx).exp();
        p.row(i).head(i + 1) = e / e.sum();
      }
      heads.middleCols(h * dh, dh) = p * v;
      if (c != nullptr) c->probs[static_cast<std::size_t>(h)] = std::move(p);
    }
    Mat<T> attn = heads * b.w_o.value;
    attn.rowwise() += b.b_o.value.row(0);
    Mat<T> drop1, drop2;
    if (rng != nullptr) {
      drop1 = nn::dropout_mask<T>(len, d, cfg_.dropout, *rng);
      attn = attn.cwiseProduct(drop1);
    }
    Mat<T> x_mid = x + attn;

    Mat<T> m = detail::layer_norm(x_mid, b.ln2_g.value, b.ln2_b.value, c != nullptr ? &c->ln2 : nullptr);
    Mat<T> fc_pre = m * b.w_fc.value;
    fc_pre.rowwise() += b.b_fc.value.row(0);
    Mat<T> fc_act = fc_pre.unaryExpr([](T v) { return detail::gelu(v); });
    Mat<T> mlp = fc_act * b.w_proj.value;
    mlp.rowwise() += b.b_proj.value.row(0);
    if (rng != nullptr) {
      drop2 = nn::dropout_mask<T>(len, d, cfg_.dropout, *rng);
      mlp = mlp.cwiseProduct(drop2);
    }
    Mat<T> out = x_mid + mlp;

    if (c != nullptr) {
      c->x_in = x;
      c->a = std::move(a);
      c->qkv = std::move(qkv);
      c->heads = std::move(heads);
      c->drop1 = std::move(drop1);
      c->x_mid = std::move(x_mid);
      c->m = std::move(m);
      c->fc_pre = std::move(fc_pre);
      c->fc_act = std::move(fc_act);
      c->drop2 = std::move(drop2);
    }
    return out;
  }

  Mat<T> block_backward(Block& b, const BlockCache& c, const Mat<T>& dout) {
    const Eigen::Index len = dout.rows();
    const int d = cfg_.d_model, nh = cfg_.n_heads, dh = cfg_.d_head();
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    // MLP branch.
    Mat<T> dmlp = c.drop2.size() != 0 ? Mat<T>(dout.cwiseProduct(c.drop2)) : dout;
    b.b_proj.grad.row(0) += dmlp.colwise().sum();
    b.w_proj.grad += c.fc_act.transpose() * dmlp;
    Mat<T> dact = dmlp * b.w_proj.value.transpose();
    Mat<T> dpre = dact.cwiseProduct(c.fc_pre.unaryExpr([](T v) { return detail::gelu_grad(v); }));
    b.b_fc.grad.row(0) += dpre.colwise().sum();
    b.w_fc.grad += c.m.transpose() * dpre;
    Mat<T> dm = dpre * b.w_fc.value.transpose();
    Mat<T> dx_mid = dout + detail::layer_norm_backward(dm, c.ln2, b.ln2_g, b.ln2_b);

    // Attention branch.
    Mat<T> dattn = c.drop1.size() != 0 ? Mat<T>(dx_mid.cwiseProduct(c.drop1)) : dx_mid;
    b.b_o.grad.row(0) += dattn.colwise().sum();
    b.w_o.grad += c.heads.transpose() * dattn;
    Mat<T> dheads = dattn * b.w_o.value.transpose();
    Mat<T> dqkv(len, 3 * d);
    for (int h = 0; h < nh; ++h) {
      const auto& p = c.probs[static_cast<std::size_t>(h)];
      auto q = c.qkv.middleCols(h * dh, dh);
      auto k = c.qkv.middleCols(d + h * dh, dh);
      auto v = c.qkv.middleCols(2 * d + h * dh, dh);
      auto dho = dheads.middleCols(h * dh, dh);
      Mat<T> dp = dho * v.transpose();
      // Softmax backward; entries above the diagonal stay exactly zero
      // because p is zero there.
      Mat<T> ds(len, len);
      for (Eigen::Index i = 0; i < len; ++i) {
        T dot = p.row(i).dot(dp.row(i));
        ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
      }
      ds *= scale;
      dqkv.middleCols(h * dh, dh) = ds * k;
      dqkv.middleCols(d + h * dh, dh) = ds.transpose() * q;
      dqkv.middleCols(2 * d + h * dh, dh) = p.transpose() * dho;
    }
    b.b_qkv.grad.row(0) += dqkv.colwise().sum();
    b.w_qkv.grad += c.a.transpose() * dqkv;
    Mat<T> da = dqkv * b.w_qkv.value.transpose();
    return dx_mid + detail::layer_norm_backward(da, c.ln1, b.ln1_g, b.ln1_b);
  }

  TransformerConfig cfg_;
  Param<T> wte_, wpe_;
  std::vector<Block> blocks_;
  Param<T> lnf_g_, lnf_b_;
};

}  // namespace irvd::embed
