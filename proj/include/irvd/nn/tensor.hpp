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

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/random.hpp"

namespace irvd::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// A named trainable tensor with its accumulated gradient.
template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<T>::Zero(rows, cols)), grad(Mat<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

template <typename T>
void zero_grads(const ParamList<T>& ps) {
  for (auto* p : ps) p->zero_grad();
}

template <typename T>
void init_normal(Mat<T>& m, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T>
void init_uniform(Mat<T>& m, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
double grad_norm(const ParamList<T>& ps) {
  double s = 0;
  for (auto* p : ps) s += static_cast<double>(p->grad.squaredNorm());
  return std::sqrt(s);
}

template <typename T>
void clip_grad_norm(const ParamList<T>& ps, double max_norm) {
  double n = grad_norm(ps);
  if (n > max_norm && n > 0) {
    for (auto* p : ps) p->grad *= static_cast<T>(max_norm / n);
  }
}

// Digest over names, shapes and raw value bytes of every parameter.
template <typename T>
std::string weights_digest(const ParamList<T>& ps) {
  std::string buf;
  for (const auto* p : ps) {
    buf += p->name;
    buf.push_back('\0');
    buf += std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols());
    buf.push_back('\0');
    buf.append(reinterpret_cast<const char*>(p->value.data()),
               static_cast<std::size_t>(p->value.size()) * sizeof(T));
  }
  return sha256_hex(buf);
}

template <typename T>
inline T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

// Binary cross-entropy from a logit, stable for large |z|.
template <typename T>
inline T bce_with_logit(T z, T y) {
  return std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
}

// Inverted dropout mask: entries are 0 or 1/(1-p).
template <typename T>
Mat<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Mat<T> m(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < p ? T(0) : keep;
  return m;
}

}  // namespace irvd::nn
