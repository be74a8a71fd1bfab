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

// Named-tensor container file.
//
//   magic   "IRVDTNS1"
//   u32     entry count
//   entry*: u32 name length, name bytes, u8 dtype (0 = f32, 1 = f64),
//           u64 rows, u64 cols, rows*cols little-endian values (row-major)
//
// Values are stored bit-exactly, so save/load round-trips are lossless.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/nn/tensor.hpp"

namespace irvd::nn {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

inline constexpr char kContainerMagic[] = "IRVDTNS1";

template <typename T>
struct NamedTensor {
  std::string name;
  Mat<T> value;
};

namespace detail {

template <typename V>
void put(std::string& out, V v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V take(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(V) > in.size()) throw Error(ErrorKind::kFormat, "truncated tensor container");
  V v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

}  // namespace detail

template <typename T>
std::string encode_container(const std::vector<NamedTensor<T>>& tensors) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  std::string out(kContainerMagic, 8);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    detail::put<std::uint8_t>(out, std::is_same_v<T, float> ? 0 : 1);
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    out.append(reinterpret_cast<const char*>(t.value.data()), static_cast<std::size_t>(t.value.size()) * sizeof(T));
  }
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> decode_container(std::string_view in) {
  if (in.size() < 8 || in.substr(0, 8) != std::string_view(kContainerMagic, 8)) {
    throw Error(ErrorKind::kFormat, "not a tensor container");
  }
  std::size_t pos = 8;
  auto n = detail::take<std::uint32_t>(in, pos);
  std::vector<NamedTensor<T>> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto len = detail::take<std::uint32_t>(in, pos);
    if (pos + len > in.size()) throw Error(ErrorKind::kFormat, "truncated tensor name");
    NamedTensor<T> t;
    t.name = std::string(in.substr(pos, len));
    pos += len;
    auto dtype = detail::take<std::uint8_t>(in, pos);
    auto rows = detail::take<std::uint64_t>(in, pos);
    auto cols = detail::take<std::uint64_t>(in, pos);
    const std::size_t count = rows * cols;
    t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (dtype == 0) {
      if (pos + count * 4 > in.size()) throw Error(ErrorKind::kFormat, "truncated tensor data");
      for (std::size_t k = 0; k < count; ++k) t.value.data()[k] = static_cast<T>(detail::take<float>(in, pos));
    } else if (dtype == 1) {
      if (pos + count * 8 > in.size()) throw Error(ErrorKind::kFormat, "truncated tensor data");
      for (std::size_t k = 0; k < count; ++k) t.value.data()[k] = static_cast<T>(detail::take<double>(in, pos));
    } else {
      throw Error(ErrorKind::kFormat, "unknown tensor dtype");
    }
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> snapshot(const ParamList<T>& ps) {
  std::vector<NamedTensor<T>> out;
  out.reserve(ps.size());
  for (const auto* p : ps) out.push_back({p->name, p->value});
  return out;
}

// Copies tensors into parameters by name; every parameter must be present
// with its exact shape.
template <typename T>
void restore(const ParamList<T>& ps, const std::vector<NamedTensor<T>>& tensors) {
  for (auto* p : ps) {
    const NamedTensor<T>* found = nullptr;
    for (const auto& t : tensors) {
      if (t.name == p->name) {
        found = &t;
        break;
      }
    }
    if (found == nullptr) throw Error(ErrorKind::kFormat, "missing tensor " + p->name);
    if (found->value.rows() != p->value.rows() || found->value.cols() != p->value.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "tensor " + p->name + " has the wrong shape");
    }
    p->value = found->value;
  }
}

}  // namespace irvd::nn
