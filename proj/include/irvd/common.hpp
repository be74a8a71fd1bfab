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

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace irvd {

enum class ErrorKind {
  kUnbalancedBraces,
  kMalformedIdentifier,
  kEmptyCorpus,
  kSingleClassDataset,
  kCorpusTooSmall,
  kUnknownId,
  kDivergedLoss,
  kEmptySplit,
  kSequenceTooLong,
  kShapeMismatch,
  kEmptySequence,
  kEmptyEvaluation,
  kMissingArtifact,
  kConfigInvalid,
  kIo,
  kFormat,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnbalancedBraces: return "UnbalancedBraces";
    case ErrorKind::kMalformedIdentifier: return "MalformedIdentifier";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kSingleClassDataset: return "SingleClassDataset";
    case ErrorKind::kCorpusTooSmall: return "CorpusTooSmall";
    case ErrorKind::kUnknownId: return "UnknownId";
    case ErrorKind::kDivergedLoss: return "DivergedLoss";
    case ErrorKind::kEmptySplit: return "EmptySplit";
    case ErrorKind::kSequenceTooLong: return "SequenceTooLong";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptySequence: return "EmptySequence";
    case ErrorKind::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::kMissingArtifact: return "MissingArtifact";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kFormat: return "Format";
  }
  return "Unknown";
}

// All library failures surface as this exception; kind() identifies the
// contract violation so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view data) {
  Digest out{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr ||
      EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::kIo, "sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

inline std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

inline std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

// First 8 bytes of a digest, big-endian. Used to derive seeds from hashes.
inline std::uint64_t digest_prefix_u64(const Digest& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
  return v;
}

// Independent seed for a named sub-stream, e.g. seed_from("7:noise:12").
inline std::uint64_t seed_from(std::string_view key) { return digest_prefix_u64(sha256(key)); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path);
}

inline std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xE) extra = 2;
    else if ((c >> 3) == 0x1E) extra = 3;
    else return false;
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

}  // namespace irvd
