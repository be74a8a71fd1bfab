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

// word2vec baselines (CBOW and Skip-Gram, both with negative sampling) over
// tokenizer ids.

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/nn/container.hpp"
#include "irvd/nn/tensor.hpp"
#include "irvd/random.hpp"
#include "irvd/tokenizer/bpe.hpp"

namespace irvd::embed {

struct Word2vecConfig {
  enum class Mode { kCbow, kSkipGram };
  Mode mode = Mode::kSkipGram;
  int dim = 100;
  int window = 5;
  int negative_samples = 5;
  int epochs = 5;
  double learning_rate = 0.0;  // 0 picks the customary 0.025 (skip-gram) / 0.05 (CBOW)

  void validate() const {
    if (dim <= 0) throw Error(ErrorKind::kConfigInvalid, "word2vec dim must be > 0");
    if (window < 1) throw Error(ErrorKind::kConfigInvalid, "word2vec window must be >= 1");
    if (negative_samples < 1 || epochs < 1) {
      throw Error(ErrorKind::kConfigInvalid, "word2vec negative_samples and epochs must be >= 1");
    }
  }

  double start_lr() const {
    if (learning_rate > 0) return learning_rate;
    return mode == Mode::kCbow ? 0.05 : 0.025;
  }
};

inline const char* to_string(Word2vecConfig::Mode m) {
  return m == Word2vecConfig::Mode::kCbow ? "cbow" : "skipgram";
}

inline Word2vecConfig::Mode parse_w2v_mode(const std::string& s) {
  if (s == "cbow") return Word2vecConfig::Mode::kCbow;
  if (s == "skipgram" || s == "skip-gram") return Word2vecConfig::Mode::kSkipGram;
  throw Error(ErrorKind::kConfigInvalid, "word2vec mode '" + s + "'");
}

inline nlohmann::json to_json(const Word2vecConfig& c) {
  return {{"mode", to_string(c.mode)},     {"dim", c.dim},       {"window", c.window},
          {"negative_samples", c.negative_samples}, {"epochs", c.epochs}, {"learning_rate", c.start_lr()}};
}

template <typename T>
nn::Mat<T> train_word2vec(const Word2vecConfig& cfg, const std::vector<std::vector<tokenizer::TokenId>>& corpus,
                          std::size_t vocab_size, std::uint64_t seed) {
  cfg.validate();
  std::vector<double> counts(vocab_size, 0.0);
  std::size_t total = 0;
  for (const auto& s : corpus) {
    for (auto id : s) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
        throw Error(ErrorKind::kUnknownId, "token id " + std::to_string(id));
      }
      counts[static_cast<std::size_t>(id)] += 1;
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorKind::kEmptyCorpus, "word2vec corpus has no tokens");

  // Negative-sampling table proportional to count^0.75.
  constexpr std::size_t kTableSize = 1 << 20;
  std::vector<tokenizer::TokenId> table(kTableSize);
  {
    double norm = 0;
    for (double c : counts) norm += std::pow(c, 0.75);
    std::size_t w = 0;
    while (counts[w] == 0) ++w;
    double cum = std::pow(counts[w], 0.75) / norm;
    for (std::size_t i = 0; i < kTableSize; ++i) {
      table[i] = static_cast<tokenizer::TokenId>(w);
      if (static_cast<double>(i + 1) / kTableSize > cum) {
        std::size_t next = w + 1;
        while (next < vocab_size && counts[next] == 0) ++next;
        if (next < vocab_size) {
          w = next;
          cum += std::pow(counts[w], 0.75) / norm;
        }
      }
    }
  }

  Rng rng(seed);
  const auto V = static_cast<Eigen::Index>(vocab_size);
  nn::Mat<T> in(V, cfg.dim);
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    in.data()[i] = static_cast<T>((rng.uniform() - 0.5) / cfg.dim);
  }
  nn::Mat<T> out = nn::Mat<T>::Zero(V, cfg.dim);
  nn::RowVec<T> hidden(cfg.dim), err(cfg.dim);

  const double lr0 = cfg.start_lr();
  const double planned = static_cast<double>(total) * cfg.epochs + 1.0;
  std::size_t processed = 0;

  // One positive target plus `negative_samples` draws, all against `input`.
  auto update = [&](const nn::RowVec<T>& input, tokenizer::TokenId target, T alpha) {
    err.setZero();
    for (int d = 0; d <= cfg.negative_samples; ++d) {
      tokenizer::TokenId t;
      T label;
      if (d == 0) {
        t = target;
        label = 1;
      } else {
        t = table[rng.below(kTableSize)];
        if (t == target) continue;
        label = 0;
      }
      T f = input.dot(out.row(t));
      T g = (label - nn::sigmoid(f)) * alpha;
      err += g * out.row(t);
      out.row(t) += g * input;
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& s : corpus) {
      const auto n = static_cast<long>(s.size());
      for (long pos = 0; pos < n; ++pos, ++processed) {
        const T alpha = static_cast<T>(std::max(lr0 * 1e-4, lr0 * (1.0 - static_cast<double>(processed) / planned)));
        const long reach = cfg.window - static_cast<long>(rng.below(static_cast<std::uint64_t>(cfg.window)));
        const long lo = std::max(0L, pos - reach), hi = std::min(n - 1, pos + reach);
        if (hi - lo < 1) continue;
        if (cfg.mode == Word2vecConfig::Mode::kSkipGram) {
          for (long c = lo; c <= hi; ++c) {
            if (c == pos) continue;
            hidden = in.row(s[static_cast<std::size_t>(c)]);
            update(hidden, s[static_cast<std::size_t>(pos)], alpha);
            in.row(s[static_cast<std::size_t>(c)]) += err;
          }
        } else {
          hidden.setZero();
          int ctx = 0;
          for (long c = lo; c <= hi; ++c) {
            if (c == pos) continue;
            hidden += in.row(s[static_cast<std::size_t>(c)]);
            ++ctx;
          }
          hidden /= static_cast<T>(ctx);
          update(hidden, s[static_cast<std::size_t>(pos)], alpha);
          for (long c = lo; c <= hi; ++c) {
            if (c != pos) in.row(s[static_cast<std::size_t>(c)]) += err;
          }
        }
      }
    }
  }
  return in;
}

template <typename T>
void save_word2vec(const std::string& dir, const Word2vecConfig& cfg, const nn::Mat<T>& table,
                   const std::string& corpus_manifest_ref) {
  std::filesystem::create_directories(dir);
  std::vector<nn::NamedTensor<T>> tensors{{"embedding", table}};
  std::string blob = nn::encode_container(tensors);
  nlohmann::json j = {{"kind", "word2vec"},
                      {"config", to_json(cfg)},
                      {"vocab_size", table.rows()},
                      {"corpus_manifest_ref", corpus_manifest_ref},
                      {"weights_digest", sha256_hex(blob)}};
  write_file(dir + "/config.json", j.dump(2) + "\n");
  write_file(dir + "/weights.bin", blob);
}

template <typename T>
nn::Mat<T> load_word2vec(const std::string& dir) {
  if (!std::filesystem::exists(dir + "/weights.bin")) {
    throw Error(ErrorKind::kMissingArtifact, "word2vec table in " + dir);
  }
  auto tensors = nn::decode_container<T>(read_file(dir + "/weights.bin"));
  for (auto& t : tensors) {
    if (t.name == "embedding") return std::move(t.value);
  }
  throw Error(ErrorKind::kFormat, dir + "/weights.bin has no embedding tensor");
}

}  // namespace irvd::embed
