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

// Canonical rewriting of extracted IR functions.
//
// The canonical form keeps opcodes, types, constants and calls into the
// standard library, and erases everything that only identifies a particular
// sample:
//   - the defined function becomes @func_<ordinal>
//   - local values become %v1, %v2, ... and labels label_1, label_2, ...
//     numbered by first occurrence
//   - other globals become @g1, @g2, ... unless allowlisted or intrinsic
//   - comments, metadata attachments (!dbg !7) and attribute groups (#0)
//     are dropped
//   - whitespace is collapsed, one instruction per line

#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/ir/extract.hpp"

namespace irvd::ir {

inline const std::vector<std::string>& default_stdlib_allowlist() {
  static const std::vector<std::string> names = {
      "abort",   "atoi",    "atol",     "calloc",   "exit",    "fclose",  "fgets",
      "fgetws",  "fopen",   "fprintf",  "fputs",    "fread",   "free",    "fscanf",
      "fwrite",  "getchar", "gets",     "malloc",   "memchr",  "memcmp",  "memcpy",
      "memmove", "memset",  "printf",   "putchar",  "puts",    "rand",    "realloc",
      "recv",    "scanf",   "snprintf", "sprintf",  "srand",   "sscanf",  "strcat",
      "strchr",  "strcmp",  "strcpy",   "strdup",   "strlen",  "strncat", "strncmp",
      "strncpy", "strrchr", "strstr",   "swprintf", "time",    "vsnprintf", "wcscat",
      "wcscpy",  "wcslen",  "wcsncat",  "wcsncpy",  "wmemcpy", "wmemset", "wprintf",
  };
  return names;
}

struct NormalizeOptions {
  std::vector<std::string> stdlib_allowlist = default_stdlib_allowlist();
};

struct NormalizedFunction {
  std::string canonical_text;
  // Non-identity renames in first-occurrence order, sigils included
  // ("%a" -> "%v1", "entry" -> "label_1", "@helper" -> "@g1").
  std::vector<std::pair<std::string, std::string>> rename_map;
  std::string content_hash;  // hex SHA-256 of canonical_text
  std::string original_name;
  std::string source_path;
  std::size_t source_index = 0;
};

namespace detail {

enum class Tok {
  kNewline,
  kSpace,
  kComment,
  kString,    // "..." including quotes
  kLocal,     // %name, text holds the unquoted name
  kGlobal,    // @name
  kLabelDef,  // name: at line start, text holds the name
  kAttrRef,   // #N
  kMetaName,  // !dbg
  kMetaRef,   // !12 or !"..."
  kWord,
  kPunct,
};

struct Token {
  Tok kind;
  std::string text;
};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::vector<Token> lex_function(std::string_view s, std::string_view where) {
  std::vector<Token> toks;
  std::size_t i = 0;
  bool line_start = true;
  auto malformed = [&](char sigil) {
    throw Error(ErrorKind::kMalformedIdentifier,
                std::string(where) + ": '" + sigil + "' not followed by an identifier");
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '\n') {
      toks.push_back({Tok::kNewline, "\n"});
      ++i;
      line_start = true;
      continue;
    }
    if (is_space(c)) {
      std::size_t j = i;
      while (j < s.size() && is_space(s[j])) ++j;
      toks.push_back({Tok::kSpace, " "});
      i = j;
      continue;
    }
    const bool at_line_start = line_start;
    line_start = false;
    if (c == ';') {
      std::size_t j = s.find('\n', i);
      if (j == std::string_view::npos) j = s.size();
      toks.push_back({Tok::kComment, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    if (c == '"') {
      std::size_t j = s.find('"', i + 1);
      j = (j == std::string_view::npos) ? s.size() : j + 1;
      std::string lit(s.substr(i, j - i));
      if (at_line_start && j < s.size() && s[j] == ':') {
        toks.push_back({Tok::kLabelDef, unquote(lit)});
        i = j + 1;
        continue;
      }
      toks.push_back({Tok::kString, std::move(lit)});
      i = j;
      continue;
    }
    if (c == '%' || c == '@') {
      std::size_t len = sigil_ident_length(s, i + 1);
      if (len == 0) malformed(c);
      toks.push_back({c == '%' ? Tok::kLocal : Tok::kGlobal, unquote(s.substr(i + 1, len))});
      i += len + 1;
      continue;
    }
    if (c == '#' && i + 1 < s.size() && is_digit(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && is_digit(s[j])) ++j;
      toks.push_back({Tok::kAttrRef, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    if (c == '!' && i + 1 < s.size()) {
      char n = s[i + 1];
      if (is_digit(n)) {
        std::size_t j = i + 1;
        while (j < s.size() && is_digit(s[j])) ++j;
        toks.push_back({Tok::kMetaRef, std::string(s.substr(i, j - i))});
        i = j;
        continue;
      }
      if (n == '"') {
        std::size_t j = s.find('"', i + 2);
        j = (j == std::string_view::npos) ? s.size() : j + 1;
        toks.push_back({Tok::kMetaRef, std::string(s.substr(i, j - i))});
        i = j;
        continue;
      }
      if (is_ident_start(n)) {
        std::size_t j = i + 1;
        while (j < s.size() && is_ident_char(s[j])) ++j;
        toks.push_back({Tok::kMetaName, std::string(s.substr(i, j - i))});
        i = j;
        continue;
      }
    }
    if (is_ident_char(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      std::string word(s.substr(i, j - i));
      if (at_line_start && j < s.size() && s[j] == ':') {
        toks.push_back({Tok::kLabelDef, std::move(word)});
        i = j + 1;
        continue;
      }
      toks.push_back({Tok::kWord, std::move(word)});
      i = j;
      continue;
    }
    toks.push_back({Tok::kPunct, std::string(1, c)});
    ++i;
  }
  return toks;
}

// Drops comments, attribute group references and metadata attachments
// (with their leading comma).
inline std::vector<Token> strip_noise(const std::vector<Token>& in) {
  std::vector<Token> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Token& t = in[i];
    if (t.kind == Tok::kComment || t.kind == Tok::kAttrRef) continue;
    if (t.kind == Tok::kMetaName) {
      std::size_t j = i + 1;
      while (j < in.size() && in[j].kind == Tok::kSpace) ++j;
      if (j < in.size() && in[j].kind == Tok::kMetaRef) {
        while (!out.empty() && out.back().kind == Tok::kSpace) out.pop_back();
        if (!out.empty() && out.back().kind == Tok::kPunct && out.back().text == ",") {
          out.pop_back();
        }
        i = j;
        continue;
      }
    }
    out.push_back(t);
  }
  return out;
}

inline const Token* prev_significant(const std::vector<Token>& toks, std::size_t i) {
  while (i > 0) {
    --i;
    if (toks[i].kind != Tok::kSpace) return &toks[i];
  }
  return nullptr;
}

}  // namespace detail

// Rewrites one extracted function into canonical form. `ordinal` (>= 1)
// picks the replacement function name.
inline NormalizedFunction normalize(const LiftedFunction& f, std::size_t ordinal,
                                    const NormalizeOptions& opts = {}) {
  using detail::Tok;
  using detail::Token;
  if (ordinal < 1) throw Error(ErrorKind::kConfigInvalid, "normalize ordinal must be >= 1");
  const std::string where = f.source_path + ":" + f.original_name;
  auto toks = detail::strip_noise(detail::lex_function(f.raw_body, where));

  // Labels are the names defined as "name:" plus anything used after the
  // "label" keyword.
  std::unordered_set<std::string> labels;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind == Tok::kLabelDef) labels.insert(toks[i].text);
    if (toks[i].kind == Tok::kLocal) {
      const Token* p = detail::prev_significant(toks, i);
      if (p != nullptr && p->kind == Tok::kWord && p->text == "label") labels.insert(toks[i].text);
    }
  }

  std::unordered_set<std::string> allow(opts.stdlib_allowlist.begin(), opts.stdlib_allowlist.end());
  std::unordered_map<std::string, std::string> local_map;
  std::unordered_map<std::string, std::string> global_map;
  NormalizedFunction nf;
  nf.original_name = f.original_name;
  nf.source_path = f.source_path;
  nf.source_index = f.source_index;
  std::size_t next_value = 1;
  std::size_t next_label = 1;
  std::size_t next_global = 1;
  const std::string func_name = "func_" + std::to_string(ordinal);

  auto record = [&](std::string from, const std::string& to) {
    if (from != to) nf.rename_map.emplace_back(std::move(from), to);
  };

  auto local_name = [&](const std::string& name) -> const std::string& {
    auto it = local_map.find(name);
    if (it != local_map.end()) return it->second;
    const bool is_label = labels.count(name) != 0;
    std::string canon = is_label ? "label_" + std::to_string(next_label++)
                                 : "v" + std::to_string(next_value++);
    record(is_label ? name : "%" + name, is_label ? canon : "%" + canon);
    return local_map.emplace(name, std::move(canon)).first->second;
  };

  auto global_name = [&](const std::string& name) -> const std::string& {
    auto it = global_map.find(name);
    if (it != global_map.end()) return it->second;
    std::string canon;
    if (name == f.original_name) {
      canon = func_name;
    } else if (allow.count(name) != 0 || name.rfind("llvm.", 0) == 0) {
      canon = name;
    } else {
      canon = "g" + std::to_string(next_global++);
    }
    record("@" + name, "@" + canon);
    return global_map.emplace(name, std::move(canon)).first->second;
  };

  // The defined name is always the first global in the header.
  global_name(f.original_name);

  std::string text;
  std::string line;
  auto flush_line = [&]() {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    if (!line.empty()) {
      if (!text.empty()) text.push_back('\n');
      text += line;
    }
    line.clear();
  };
  for (const Token& t : toks) {
    switch (t.kind) {
      case Tok::kNewline:
        flush_line();
        break;
      case Tok::kSpace:
        if (!line.empty() && line.back() != ' ') line.push_back(' ');
        break;
      case Tok::kLocal:
        line += '%';
        line += local_name(t.text);
        break;
      case Tok::kGlobal:
        line += '@';
        line += global_name(t.text);
        break;
      case Tok::kLabelDef:
        line += local_name(t.text);
        line += ':';
        break;
      default:
        line += t.text;
        break;
    }
  }
  flush_line();

  nf.canonical_text = std::move(text);
  nf.content_hash = sha256_hex(nf.canonical_text);
  return nf;
}

// Canonical text carries its own define line, so it can be fed back in.
inline NormalizedFunction renormalize(const NormalizedFunction& nf, std::size_t ordinal,
                                      const NormalizeOptions& opts = {}) {
  LiftedFunction f;
  f.original_name = "func_" + std::to_string(ordinal);
  auto at = nf.canonical_text.find('@');
  if (at != std::string::npos) {
    auto len = detail::sigil_ident_length(nf.canonical_text, at + 1);
    f.original_name = detail::unquote(std::string_view(nf.canonical_text).substr(at + 1, len));
  }
  f.raw_body = nf.canonical_text;
  f.source_path = nf.source_path;
  f.source_index = nf.source_index;
  return normalize(f, ordinal, opts);
}

// Keeps the first occurrence of every content hash, preserving order.
inline std::vector<NormalizedFunction> dedupe(std::vector<NormalizedFunction> fs) {
  std::unordered_set<std::string> seen;
  std::vector<NormalizedFunction> out;
  out.reserve(fs.size());
  for (auto& f : fs) {
    if (seen.insert(f.content_hash).second) out.push_back(std::move(f));
  }
  return out;
}

}  // namespace irvd::ir
