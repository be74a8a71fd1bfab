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

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/nn/tensor.hpp"

namespace irvd::nn {

struct OptimizerSpec {
  enum class Kind { kSgdMomentum, kAdam };
  Kind kind = Kind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  void validate() const {
    if (!(learning_rate > 0)) throw Error(ErrorKind::kConfigInvalid, "learning_rate must be > 0");
    if (momentum < 0) throw Error(ErrorKind::kConfigInvalid, "momentum must be >= 0");
  }

  // "SGD -LR: 0.0001 -Mom: 0.01" / "Adam -LR: 0.001", the row labels used in reports.
  std::string label() const {
    char buf[96];
    if (kind == Kind::kSgdMomentum) {
      std::snprintf(buf, sizeof buf, "SGD -LR: %g -Mom: %g", learning_rate, momentum);
    } else {
      std::snprintf(buf, sizeof buf, "Adam -LR: %g", learning_rate);
    }
    return buf;
  }

  bool operator==(const OptimizerSpec&) const = default;
};

inline nlohmann::json to_json(const OptimizerSpec& s) {
  nlohmann::json j = {{"kind", s.kind == OptimizerSpec::Kind::kAdam ? "adam" : "sgd_momentum"},
                      {"learning_rate", s.learning_rate}};
  if (s.kind == OptimizerSpec::Kind::kSgdMomentum) j["momentum"] = s.momentum;
  return j;
}

inline OptimizerSpec optimizer_from_json(const nlohmann::json& j) {
  OptimizerSpec s;
  auto kind = j.at("kind").get<std::string>();
  if (kind == "adam") {
    s.kind = OptimizerSpec::Kind::kAdam;
  } else if (kind == "sgd_momentum" || kind == "sgd") {
    s.kind = OptimizerSpec::Kind::kSgdMomentum;
  } else {
    throw Error(ErrorKind::kConfigInvalid, "optimizer kind '" + kind + "'");
  }
  s.learning_rate = j.at("learning_rate").get<double>();
  s.momentum = j.value("momentum", 0.0);
  s.beta1 = j.value("beta1", 0.9);
  s.beta2 = j.value("beta2", 0.999);
  s.epsilon = j.value("epsilon", 1e-7);
  s.validate();
  return s;
}

// Classical momentum without dampening:
//   velocity <- momentum * velocity + grad
//   param    <- param - lr * velocity
template <typename T>
void sgd_momentum_step(Mat<T>& param, const Mat<T>& grad, Mat<T>& velocity, double lr, double momentum) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || param.rows() != velocity.rows() ||
      param.cols() != velocity.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "sgd_momentum_step: param/grad/velocity shapes differ");
  }
  velocity = static_cast<T>(momentum) * velocity + grad;
  param -= static_cast<T>(lr) * velocity;
}

template <typename T>
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const ParamList<T>& ps) = 0;
  virtual void set_learning_rate(double lr) = 0;
};

template <typename T>
class SgdMomentum final : public Optimizer<T> {
 public:
  SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void step(const ParamList<T>& ps) override {
    if (velocity_.empty()) {
      for (auto* p : ps) velocity_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    }
    if (velocity_.size() != ps.size()) throw Error(ErrorKind::kShapeMismatch, "parameter list changed");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      sgd_momentum_step(ps[i]->value, ps[i]->grad, velocity_[i], lr_, momentum_);
    }
  }

  void set_learning_rate(double lr) override { lr_ = lr; }

 private:
  double lr_;
  double momentum_;
  std::vector<Mat<T>> velocity_;
};

template <typename T>
class Adam final : public Optimizer<T> {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const ParamList<T>& ps) override {
    if (m_.empty()) {
      for (auto* p : ps) {
        m_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (m_.size() != ps.size()) throw Error(ErrorKind::kShapeMismatch, "parameter list changed");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto& g = ps[i]->grad;
      m_[i] = b1 * m_[i] + (T(1) - b1) * g;
      v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
      const T step = static_cast<T>(lr_ / c1);
      const T vs = static_cast<T>(1.0 / c2);
      const T eps = static_cast<T>(eps_);
      ps[i]->value.array() -= step * m_[i].array() / ((v_[i].array() * vs).sqrt() + eps);
    }
  }

  void set_learning_rate(double lr) override { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat<T>> m_, v_;
};

template <typename T>
std::unique_ptr<Optimizer<T>> make_optimizer(const OptimizerSpec& spec) {
  spec.validate();
  if (spec.kind == OptimizerSpec::Kind::kSgdMomentum) {
    return std::make_unique<SgdMomentum<T>>(spec.learning_rate, spec.momentum);
  }
  return std::make_unique<Adam<T>>(spec.learning_rate, spec.beta1, spec.beta2, spec.epsilon);
}

}  // namespace irvd::nn
