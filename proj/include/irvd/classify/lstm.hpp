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

// Stacked LSTM with a single sigmoid output unit.
//
// Per layer and time step (gate order i, f, g, o):
//   z = x_t Wx + h_{t-1} Wh + b
//   c = sigmoid(f) * c_{t-1} + sigmoid(i) * tanh(g)
//   h = sigmoid(o) * tanh(c)
//   y_t = Dropout(LeakyReLU(h))          -> input of the next layer
// The head reads y at the last step of the top layer. Sequences in a batch
// are right-padded; at a padded step the state is carried over unchanged,
// so the last step holds the state of each sequence's final real token.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/nn/optim.hpp"
#include "irvd/nn/tensor.hpp"
#include "irvd/random.hpp"

namespace irvd::classify {

using nn::Mat;
using nn::Param;
using nn::ParamList;

struct ClassifierConfig {
  int lstm_layers = 2;
  int hidden_units = 128;
  double leaky_slope = 0.01;
  double dropout = 0.2;
  int epochs = 50;
  int batch_size = 32;
  bool freeze_embedder = true;
  nn::OptimizerSpec optimizer;
  double decision_threshold = 0.5;

  void validate() const {
    if (lstm_layers < 1 || hidden_units < 1) throw Error(ErrorKind::kConfigInvalid, "lstm_layers and hidden_units must be >= 1");
    if (dropout < 0 || dropout >= 1) throw Error(ErrorKind::kConfigInvalid, "classifier dropout must be in [0,1)");
    if (epochs < 1) throw Error(ErrorKind::kConfigInvalid, "classifier epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorKind::kConfigInvalid, "classifier batch_size must be >= 1");
    if (leaky_slope < 0) throw Error(ErrorKind::kConfigInvalid, "leaky_slope must be >= 0");
    if (decision_threshold <= 0 || decision_threshold >= 1) {
      throw Error(ErrorKind::kConfigInvalid, "decision_threshold must be in (0,1)");
    }
    optimizer.validate();
  }
};

inline nlohmann::json to_json(const ClassifierConfig& c) {
  return {{"lstm_layers", c.lstm_layers}, {"hidden_units", c.hidden_units},
          {"leaky_slope", c.leaky_slope}, {"dropout", c.dropout},
          {"epochs", c.epochs},           {"batch_size", c.batch_size},
          {"freeze_embedder", c.freeze_embedder}, {"optimizer", nn::to_json(c.optimizer)},
          {"decision_threshold", c.decision_threshold}};
}

inline ClassifierConfig classifier_config_from_json(const nlohmann::json& j, ClassifierConfig c = {}) {
  c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.dropout = j.value("dropout", c.dropout);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.freeze_embedder = j.value("freeze_embedder", c.freeze_embedder);
  if (j.contains("optimizer")) c.optimizer = nn::optimizer_from_json(j["optimizer"]);
  c.decision_threshold = j.value("decision_threshold", c.decision_threshold);
  return c;
}

template <typename T>
class LstmClassifier {
 public:
  struct Layer {
    Param<T> w_x, w_h, b;
  };

  LstmClassifier() = default;

  LstmClassifier(int input_dim, const ClassifierConfig& cfg, std::uint64_t seed)
      : input_dim_(input_dim), hidden_(cfg.hidden_units), slope_(static_cast<T>(cfg.leaky_slope)),
        dropout_(cfg.dropout) {
    if (input_dim < 1) throw Error(ErrorKind::kConfigInvalid, "classifier input width must be >= 1");
    Rng rng(seed);
    const int H = hidden_;
    int in = input_dim;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
      const std::string p = "lstm." + std::to_string(l) + ".";
      Layer layer{Param<T>(p + "w_x", in, 4 * H), Param<T>(p + "w_h", H, 4 * H), Param<T>(p + "b", 1, 4 * H)};
      nn::init_uniform(layer.w_x.value, rng, std::sqrt(6.0 / (in + 4 * H)));
      nn::init_uniform(layer.w_h.value, rng, 1.0 / std::sqrt(static_cast<double>(H)));
      layer.b.value.middleCols(H, H).setOnes();  // forget-gate bias
      layers_.push_back(std::move(layer));
      in = H;
    }
    head_w_ = Param<T>("head.w", H, 1);
    head_b_ = Param<T>("head.b", 1, 1);
    nn::init_uniform(head_w_.value, rng, std::sqrt(6.0 / (H + 1)));
  }

  int input_dim() const { return input_dim_; }
  int hidden_units() const { return hidden_; }

  ParamList<T> params() {
    ParamList<T> ps;
    for (auto& l : layers_) {
      ps.push_back(&l.w_x);
      ps.push_back(&l.w_h);
      ps.push_back(&l.b);
    }
    ps.push_back(&head_w_);
    ps.push_back(&head_b_);
    return ps;
  }

  Param<T>& head_weight() { return head_w_; }
  Param<T>& head_bias() { return head_b_; }

  // Mean binary cross-entropy of the batch. With `accumulate`, gradients of
  // that mean are added to the parameters; with `d_inputs`, dLoss/dx for
  // every real (unpadded) row of every input is written there. Dropout is
  // active only when `dropout_rng` is given.
  double forward_backward(const std::vector<const Mat<T>*>& xs, const std::vector<T>& labels, Rng* dropout_rng,
                          bool accumulate, std::vector<Mat<T>>* d_inputs = nullptr,
                          std::vector<T>* probs = nullptr) {
    Pass pass = run(xs, dropout_rng);
    const auto B = static_cast<Eigen::Index>(xs.size());
    double loss = 0;
    Mat<T> dlogit(B, 1);
    for (Eigen::Index b = 0; b < B; ++b) {
      const T z = pass.logits(b, 0);
      const T y = labels[static_cast<std::size_t>(b)];
      loss += static_cast<double>(nn::bce_with_logit(z, y));
      dlogit(b, 0) = (nn::sigmoid(z) - y) / static_cast<T>(B);
    }
    if (probs != nullptr) {
      probs->resize(static_cast<std::size_t>(B));
      for (Eigen::Index b = 0; b < B; ++b) (*probs)[static_cast<std::size_t>(b)] = nn::sigmoid(pass.logits(b, 0));
    }
    if (accumulate || d_inputs != nullptr) backward(pass, dlogit, d_inputs);
    return loss / static_cast<double>(B);
  }

  // Evaluation-mode probabilities for a batch.
  std::vector<T> predict_batch(const std::vector<const Mat<T>*>& xs) {
    Pass pass = run(xs, nullptr);
    std::vector<T> out(xs.size());
    for (std::size_t b = 0; b < xs.size(); ++b) out[b] = nn::sigmoid(pass.logits(static_cast<Eigen::Index>(b), 0));
    return out;
  }

  T predict(const Mat<T>& x) { return predict_batch({&x})[0]; }

 private:
  struct LayerTrace {
    std::vector<Mat<T>> in, h_prev, c_prev, gi, gf, gg, go, tanh_c, h, drop;
  };

  struct Pass {
    std::vector<Eigen::Array<T, Eigen::Dynamic, 1>> mask;  // per step, 1 = real token
    std::vector<LayerTrace> layers;
    Mat<T> features;  // top-layer output at the last step
    Mat<T> logits;
    std::vector<Eigen::Index> lengths;
  };

  T leaky(T v) const { return v > 0 ? v : slope_ * v; }
  T leaky_grad(T v) const { return v > 0 ? T(1) : slope_; }

  static Mat<T> sig(const Mat<T>& z) { return z.unaryExpr([](T v) { return nn::sigmoid(v); }); }

  Pass run(const std::vector<const Mat<T>*>& xs, Rng* rng) {
    const auto B = static_cast<Eigen::Index>(xs.size());
    if (B == 0) throw Error(ErrorKind::kEmptyEvaluation, "empty batch");
    Pass pass;
    Eigen::Index L = 0;
    for (const auto* x : xs) {
      if (x->rows() == 0) throw Error(ErrorKind::kEmptySequence, "classifier input has no tokens");
      if (x->cols() != input_dim_) throw Error(ErrorKind::kShapeMismatch, "classifier input width mismatch");
      pass.lengths.push_back(x->rows());
      L = std::max(L, x->rows());
    }
    const int H = hidden_;
    pass.mask.resize(static_cast<std::size_t>(L));
    std::vector<Mat<T>> seq(static_cast<std::size_t>(L), Mat<T>::Zero(B, input_dim_));
    for (Eigen::Index t = 0; t < L; ++t) {
      auto& m = pass.mask[static_cast<std::size_t>(t)];
      m.resize(B);
      for (Eigen::Index b = 0; b < B; ++b) {
        const bool real = t < pass.lengths[static_cast<std::size_t>(b)];
        m(b) = real ? T(1) : T(0);
        if (real) seq[static_cast<std::size_t>(t)].row(b) = xs[static_cast<std::size_t>(b)]->row(t);
      }
    }
    const bool train = rng != nullptr && dropout_ > 0;
    for (auto& layer : layers_) {
      LayerTrace tr;
      Mat<T> h = Mat<T>::Zero(B, H), c = Mat<T>::Zero(B, H);
      std::vector<Mat<T>> out(static_cast<std::size_t>(L));
      for (Eigen::Index t = 0; t < L; ++t) {
        const auto& x = seq[static_cast<std::size_t>(t)];
        const auto& m = pass.mask[static_cast<std::size_t>(t)];
        Mat<T> z = x * layer.w_x.value + h * layer.w_h.value;
        z.rowwise() += layer.b.value.row(0);
        Mat<T> gi = sig(z.leftCols(H));
        Mat<T> gf = sig(z.middleCols(H, H));
        Mat<T> gg = z.middleCols(2 * H, H).array().tanh().matrix();
        Mat<T> go = sig(z.rightCols(H));
        Mat<T> c_new = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
        Mat<T> tc = c_new.array().tanh().matrix();
        Mat<T> h_new = go.cwiseProduct(tc);
        tr.in.push_back(x);
        tr.h_prev.push_back(h);
        tr.c_prev.push_back(c);
        for (Eigen::Index b = 0; b < B; ++b) {
          if (m(b) != T(0)) {
            h.row(b) = h_new.row(b);
            c.row(b) = c_new.row(b);
          }
        }
        Mat<T> y = h.unaryExpr([this](T v) { return leaky(v); });
        Mat<T> drop;
        if (train) {
          drop = nn::dropout_mask<T>(B, H, dropout_, *rng);
          y = y.cwiseProduct(drop);
        }
        tr.gi.push_back(std::move(gi));
        tr.gf.push_back(std::move(gf));
        tr.gg.push_back(std::move(gg));
        tr.go.push_back(std::move(go));
        tr.tanh_c.push_back(std::move(tc));
        tr.h.push_back(h);
        tr.drop.push_back(std::move(drop));
        out[static_cast<std::size_t>(t)] = std::move(y);
      }
      pass.layers.push_back(std::move(tr));
      seq = std::move(out);
    }
    pass.features = seq.back();
    pass.logits = pass.features * head_w_.value;
    pass.logits.array() += head_b_.value(0, 0);
    return pass;
  }

  void backward(const Pass& pass, const Mat<T>& dlogit, std::vector<Mat<T>>* d_inputs) {
    const Eigen::Index B = dlogit.rows();
    const auto L = static_cast<Eigen::Index>(pass.mask.size());
    const int H = hidden_;
    head_w_.grad += pass.features.transpose() * dlogit;
    head_b_.grad(0, 0) += dlogit.sum();

    std::vector<Mat<T>> dout(static_cast<std::size_t>(L));
    dout.back() = dlogit * head_w_.value.transpose();
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
      auto& layer = layers_[static_cast<std::size_t>(l)];
      const auto& tr = pass.layers[static_cast<std::size_t>(l)];
      std::vector<Mat<T>> din(static_cast<std::size_t>(L));
      Mat<T> dh_next = Mat<T>::Zero(B, H), dc_next = Mat<T>::Zero(B, H);
      for (Eigen::Index t = L - 1; t >= 0; --t) {
        const auto ut = static_cast<std::size_t>(t);
        const auto& m = pass.mask[ut];
        Mat<T> dh = dh_next;
        if (dout[ut].size() != 0) {
          Mat<T> dy = tr.drop[ut].size() != 0 ? Mat<T>(dout[ut].cwiseProduct(tr.drop[ut])) : dout[ut];
          dh += dy.cwiseProduct(tr.h[ut].unaryExpr([this](T v) { return leaky_grad(v); }));
        }
        // Padded rows pass their gradient straight to the previous step.
        Mat<T> carry_h = (dh.array().colwise() * (T(1) - m)).matrix();
        Mat<T> carry_c = (dc_next.array().colwise() * (T(1) - m)).matrix();
        dh = (dh.array().colwise() * m).matrix();
        Mat<T> dc = (dc_next.array().colwise() * m).matrix();

        const auto& gi = tr.gi[ut];
        const auto& gf = tr.gf[ut];
        const auto& gg = tr.gg[ut];
        const auto& go = tr.go[ut];
        const auto& tc = tr.tanh_c[ut];
        Mat<T> d_o = dh.cwiseProduct(tc);
        dc += dh.cwiseProduct(go).cwiseProduct((T(1) - tc.array().square()).matrix());
        Mat<T> dz(B, 4 * H);
        dz.leftCols(H) = dc.cwiseProduct(gg).cwiseProduct((gi.array() * (T(1) - gi.array())).matrix());
        dz.middleCols(H, H) =
            dc.cwiseProduct(tr.c_prev[ut]).cwiseProduct((gf.array() * (T(1) - gf.array())).matrix());
        dz.middleCols(2 * H, H) = dc.cwiseProduct(gi).cwiseProduct((T(1) - gg.array().square()).matrix());
        dz.rightCols(H) = d_o.cwiseProduct((go.array() * (T(1) - go.array())).matrix());

        layer.w_x.grad += tr.in[ut].transpose() * dz;
        layer.w_h.grad += tr.h_prev[ut].transpose() * dz;
        layer.b.grad.row(0) += dz.colwise().sum();
        din[ut] = dz * layer.w_x.value.transpose();
        dh_next = dz * layer.w_h.value.transpose() + carry_h;
        dc_next = dc.cwiseProduct(gf) + carry_c;
      }
      dout = std::move(din);
    }
    if (d_inputs != nullptr) {
      d_inputs->resize(static_cast<std::size_t>(B));
      for (Eigen::Index b = 0; b < B; ++b) {
        const Eigen::Index len = pass.lengths[static_cast<std::size_t>(b)];
        Mat<T>& dx = (*d_inputs)[static_cast<std::size_t>(b)];
        dx.resize(len, input_dim_);
        for (Eigen::Index t = 0; t < len; ++t) dx.row(t) = dout[static_cast<std::size_t>(t)].row(b);
      }
    }
  }

  int input_dim_ = 0;
  int hidden_ = 0;
  T slope_ = T(0.01);
  double dropout_ = 0;
  std::vector<Layer> layers_;
  Param<T> head_w_, head_b_;
};

}  // namespace irvd::classify
