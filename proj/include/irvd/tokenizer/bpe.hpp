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

// Byte-level BPE tokenizer.
//
// Ids 0..3 are the special tokens, 4..259 the 256 byte values, and every
// learned merge that yields a new string appends the next id. Text is first
// cut into chunks (a word or punctuation run with at most one leading space,
// or a whitespace run) and merges never cross chunk boundaries. Because every
// byte has its own id, encoding is lossless on arbitrary input.
//
// On disk a model is vocab.json (token string -> id) plus merges.txt (one
// merge per line in rank order). Token strings use the usual printable
// byte-to-unicode mapping so both files are plain text.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "irvd/common.hpp"

namespace irvd::tokenizer {

using TokenId = std::int32_t;

struct SpecialIds {
  TokenId pad = 0;
  TokenId bos = 1;
  TokenId eos = 2;
  TokenId unk = 3;
};

inline constexpr TokenId kNumSpecials = 4;
inline constexpr TokenId kFirstByteId = kNumSpecials;
inline constexpr TokenId kBaseVocab = kNumSpecials + 256;

inline const std::vector<std::string>& special_strings() {
  static const std::vector<std::string> s = {"<|pad|>", "<|bos|>", "<|eos|>", "<|unk|>"};
  return s;
}

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Printable stand-in for each byte: visible Latin-1 bytes map to
// themselves, the rest to code points from 256 upward.
inline const std::vector<std::string>& byte_to_unicode() {
  static const std::vector<std::string> table = [] {
    std::vector<std::string> t(256);
    std::uint32_t n = 0;
    for (std::uint32_t b = 0; b < 256; ++b) {
      bool visible = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE);
      std::uint32_t cp = visible ? b : 256 + n++;
      append_utf8(t[b], cp);
    }
    return t;
  }();
  return table;
}

inline std::string display(std::string_view bytes) {
  std::string out;
  for (unsigned char b : bytes) out += byte_to_unicode()[b];
  return out;
}

inline std::string from_display(std::string_view s) {
  static const std::unordered_map<std::string, unsigned char> rev = [] {
    std::unordered_map<std::string, unsigned char> r;
    const auto& t = byte_to_unicode();
    for (int b = 0; b < 256; ++b) r[t[b]] = static_cast<unsigned char>(b);
    return r;
  }();
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : 3;
    auto it = rev.find(std::string(s.substr(i, len)));
    if (it == rev.end()) throw Error(ErrorKind::kFormat, "token string outside byte alphabet");
    out.push_back(static_cast<char>(it->second));
    i += len;
  }
  return out;
}

enum class CharClass { kWord, kPunct, kSpace };

inline CharClass classify(unsigned char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return CharClass::kSpace;
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
      c == '.' || c >= 0x80) {
    return CharClass::kWord;
  }
  return CharClass::kPunct;
}

// Concatenating the chunks gives back the input.
inline std::vector<std::string_view> pretokenize(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t start = i;
    auto cls = classify(static_cast<unsigned char>(s[i]));
    if (cls == CharClass::kSpace) {
      std::size_t j = i;
      while (j < s.size() && classify(static_cast<unsigned char>(s[j])) == CharClass::kSpace) ++j;
      // A single trailing ' ' before a non-space joins the next chunk.
      if (j < s.size() && s[j - 1] == ' ') {
        if (j - 1 > i) out.push_back(s.substr(i, j - 1 - i));
        start = j - 1;
        i = j;
        cls = classify(static_cast<unsigned char>(s[i]));
      } else {
        out.push_back(s.substr(i, j - i));
        i = j;
        continue;
      }
    }
    while (i < s.size() && classify(static_cast<unsigned char>(s[i])) == cls) ++i;
    out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline std::uint64_t pair_key(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace detail

struct TrainOptions {
  std::size_t vocab_size = 8192;
  std::size_t min_frequency = 2;
};

class TokenizerModel {
 public:
  TokenizerModel() { init_base(); }

  std::size_t vocab_size() const { return id_to_bytes_.size(); }
  const std::vector<std::pair<TokenId, TokenId>>& merges() const { return merges_; }
  const SpecialIds& specials() const { return specials_; }
  std::size_t max_len() const { return max_len_; }
  void set_max_len(std::size_t n) { max_len_ = n; }

  bool is_special(TokenId id) const { return id >= 0 && id < kNumSpecials; }

  // Raw bytes of a non-special token.
  const std::string& token_bytes(TokenId id) const { return id_to_bytes_.at(static_cast<std::size_t>(id)); }

  std::string token_string(TokenId id) const {
    if (is_special(id)) return special_strings()[static_cast<std::size_t>(id)];
    return detail::display(token_bytes(id));
  }

  std::vector<TokenId> encode(std::string_view text) const {
    std::vector<TokenId> out;
    for (auto chunk : detail::pretokenize(text)) encode_chunk(chunk, out);
    return out;
  }

  // BOS + encode(text) + EOS, cut to `max_len` positions.
  std::vector<TokenId> encode_framed(std::string_view text) const {
    std::vector<TokenId> out{specials_.bos};
    auto body = encode(text);
    out.insert(out.end(), body.begin(), body.end());
    out.push_back(specials_.eos);
    if (out.size() > max_len_) out.resize(max_len_);
    return out;
  }

  std::string decode(const std::vector<TokenId>& ids) const {
    std::string out;
    for (TokenId id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= id_to_bytes_.size()) {
        throw Error(ErrorKind::kUnknownId, "token id " + std::to_string(id));
      }
      if (is_special(id)) continue;
      out += id_to_bytes_[static_cast<std::size_t>(id)];
    }
    return out;
  }

  static TokenizerModel train(const std::vector<std::string>& corpus, const TrainOptions& opts);

  std::string vocab_json() const {
    std::string out = "{";
    for (std::size_t id = 0; id < id_to_bytes_.size(); ++id) {
      if (id != 0) out += ",";
      out += "\n  " + nlohmann::json(token_string(static_cast<TokenId>(id))).dump() + ": " + std::to_string(id);
    }
    out += "\n}\n";
    return out;
  }

  std::string merges_txt() const {
    std::string out = "#version: 0.2\n";
    for (auto [a, b] : merges_) out += token_string(a) + " " + token_string(b) + "\n";
    return out;
  }

  void save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    write_file(dir + "/vocab.json", vocab_json());
    write_file(dir + "/merges.txt", merges_txt());
  }

  static TokenizerModel load(const std::string& dir) {
    TokenizerModel m;
    nlohmann::json vocab;
    try {
      vocab = nlohmann::json::parse(read_file(dir + "/vocab.json"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, dir + "/vocab.json: " + e.what());
    }
    std::vector<std::string> by_id(vocab.size());
    for (auto it = vocab.begin(); it != vocab.end(); ++it) {
      auto id = it.value().get<std::size_t>();
      if (id >= by_id.size()) throw Error(ErrorKind::kFormat, "vocab ids are not dense");
      by_id[id] = it.key();
    }
    for (std::size_t id = 0; id < static_cast<std::size_t>(kBaseVocab); ++id) {
      if (by_id[id] != m.token_string(static_cast<TokenId>(id))) {
        throw Error(ErrorKind::kFormat, "vocab base alphabet mismatch at id " + std::to_string(id));
      }
    }
    for (std::size_t id = kBaseVocab; id < by_id.size(); ++id) {
      m.add_token(detail::from_display(by_id[id]));
    }
    std::string merges = read_file(dir + "/merges.txt");
    std::size_t pos = 0;
    while (pos < merges.size()) {
      std::size_t end = merges.find('\n', pos);
      if (end == std::string::npos) end = merges.size();
      std::string line = merges.substr(pos, end - pos);
      pos = end + 1;
      if (line.empty() || line.rfind("#version", 0) == 0) continue;
      auto sp = line.find(' ');
      if (sp == std::string::npos) throw Error(ErrorKind::kFormat, "bad merge line: " + line);
      TokenId a = m.lookup(detail::from_display(line.substr(0, sp)));
      TokenId b = m.lookup(detail::from_display(line.substr(sp + 1)));
      m.add_merge(a, b);
    }
    return m;
  }

 private:
  void init_base() {
    id_to_bytes_.assign(kNumSpecials, std::string());
    for (int b = 0; b < 256; ++b) add_token(std::string(1, static_cast<char>(b)));
  }

  TokenId add_token(const std::string& bytes) {
    auto it = bytes_to_id_.find(bytes);
    if (it != bytes_to_id_.end()) return it->second;
    auto id = static_cast<TokenId>(id_to_bytes_.size());
    id_to_bytes_.push_back(bytes);
    bytes_to_id_.emplace(bytes, id);
    return id;
  }

  TokenId lookup(const std::string& bytes) const {
    auto it = bytes_to_id_.find(bytes);
    if (it == bytes_to_id_.end()) throw Error(ErrorKind::kFormat, "merge refers to unknown token");
    return it->second;
  }

  TokenId add_merge(TokenId a, TokenId b) {
    TokenId out = add_token(token_bytes(a) + token_bytes(b));
    merge_rank_.emplace(detail::pair_key(a, b), std::make_pair(static_cast<std::int32_t>(merges_.size()), out));
    merges_.emplace_back(a, b);
    return out;
  }

  void encode_chunk(std::string_view chunk, std::vector<TokenId>& out) const {
    std::vector<TokenId> sym;
    sym.reserve(chunk.size());
    for (unsigned char c : chunk) sym.push_back(kFirstByteId + c);
    while (sym.size() > 1) {
      std::int32_t best_rank = INT32_MAX;
      TokenId best_out = -1;
      std::uint64_t best_key = 0;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        auto it = merge_rank_.find(detail::pair_key(sym[i], sym[i + 1]));
        if (it != merge_rank_.end() && it->second.first < best_rank) {
          best_rank = it->second.first;
          best_out = it->second.second;
          best_key = it->first;
        }
      }
      if (best_out < 0) break;
      std::vector<TokenId> next;
      next.reserve(sym.size());
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && detail::pair_key(sym[i], sym[i + 1]) == best_key) {
          next.push_back(best_out);
          ++i;
        } else {
          next.push_back(sym[i]);
        }
      }
      sym.swap(next);
    }
    out.insert(out.end(), sym.begin(), sym.end());
  }

  std::vector<std::string> id_to_bytes_;  // empty for specials
  std::unordered_map<std::string, TokenId> bytes_to_id_;
  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::unordered_map<std::uint64_t, std::pair<std::int32_t, TokenId>> merge_rank_;
  SpecialIds specials_;
  std::size_t max_len_ = 2048;
};

// Greedy BPE: repeatedly merges the most frequent adjacent pair (ties go to
// the lexicographically smaller (left, right) byte pair) until the vocabulary
// reaches opts.vocab_size or no pair occurs opts.min_frequency times.
inline TokenizerModel TokenizerModel::train(const std::vector<std::string>& corpus,
                                            const TrainOptions& opts) {
  TokenizerModel m;
  if (opts.vocab_size < static_cast<std::size_t>(kBaseVocab)) {
    throw Error(ErrorKind::kConfigInvalid,
                "vocab_size must be at least " + std::to_string(kBaseVocab));
  }
  if (opts.vocab_size == static_cast<std::size_t>(kBaseVocab)) return m;

  std::map<std::string, std::int64_t> chunk_counts;
  for (const auto& text : corpus) {
    for (auto c : detail::pretokenize(text)) ++chunk_counts[std::string(c)];
  }
  struct Word {
    std::vector<TokenId> sym;
    std::int64_t count;
  };
  std::vector<Word> words;
  words.reserve(chunk_counts.size());
  for (const auto& [chunk, count] : chunk_counts) {
    Word w{{}, count};
    for (unsigned char c : chunk) w.sym.push_back(kFirstByteId + c);
    words.push_back(std::move(w));
  }

  std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
  std::unordered_map<std::uint64_t, std::set<std::size_t>> where;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& s = words[w].sym;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      auto k = detail::pair_key(s[i], s[i + 1]);
      pair_counts[k] += words[w].count;
      where[k].insert(w);
    }
  }

  // Priority order: higher count first, then smaller (left, right) bytes.
  auto cmp = [&m](const std::pair<std::int64_t, std::uint64_t>& x,
                  const std::pair<std::int64_t, std::uint64_t>& y) {
    if (x.first != y.first) return x.first > y.first;
    auto xa = static_cast<TokenId>(x.second >> 32), xb = static_cast<TokenId>(x.second & 0xFFFFFFFF);
    auto ya = static_cast<TokenId>(y.second >> 32), yb = static_cast<TokenId>(y.second & 0xFFFFFFFF);
    const auto& xl = m.token_bytes(xa);
    const auto& yl = m.token_bytes(ya);
    if (xl != yl) return xl < yl;
    return m.token_bytes(xb) < m.token_bytes(yb);
  };
  std::set<std::pair<std::int64_t, std::uint64_t>, decltype(cmp)> queue(cmp);
  for (auto [k, c] : pair_counts) queue.insert({c, k});

  std::set<std::string> reserved(special_strings().begin(), special_strings().end());
  auto adjust = [&](std::uint64_t k, std::int64_t delta, std::size_t w) {
    auto it = pair_counts.find(k);
    std::int64_t old = it == pair_counts.end() ? 0 : it->second;
    if (old > 0) queue.erase({old, k});
    std::int64_t now = old + delta;
    if (now > 0) {
      pair_counts[k] = now;
      queue.insert({now, k});
    } else if (it != pair_counts.end()) {
      pair_counts.erase(it);
    }
    if (delta > 0) where[k].insert(w);
  };

  bool merged_any = false;
  while (m.vocab_size() < opts.vocab_size && !queue.empty()) {
    auto [count, key] = *queue.begin();
    if (count < static_cast<std::int64_t>(opts.min_frequency)) break;
    auto a = static_cast<TokenId>(key >> 32);
    auto b = static_cast<TokenId>(key & 0xFFFFFFFF);
    if (reserved.count(detail::display(m.token_bytes(a) + m.token_bytes(b))) != 0) {
      queue.erase(queue.begin());
      pair_counts.erase(key);
      continue;
    }
    TokenId out = m.add_merge(a, b);
    merged_any = true;
    auto affected = std::move(where[key]);
    where.erase(key);
    for (std::size_t w : affected) {
      auto& s = words[w].sym;
      const std::int64_t n = words[w].count;
      std::vector<TokenId> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i + 1 < s.size(); ++i) adjust(detail::pair_key(s[i], s[i + 1]), -n, w);
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
          next.push_back(out);
          ++i;
        } else {
          next.push_back(s[i]);
        }
      }
      s.swap(next);
      for (std::size_t i = 0; i + 1 < s.size(); ++i) adjust(detail::pair_key(s[i], s[i + 1]), n, w);
    }
  }
  if (!merged_any) {
    throw Error(ErrorKind::kCorpusTooSmall,
                "no byte pair occurs at least " + std::to_string(opts.min_frequency) + " times");
  }
  return m;
}

}  // namespace irvd::tokenizer
