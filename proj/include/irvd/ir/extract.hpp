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

// Splits textual LLVM modules into their function definitions.

#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "irvd/common.hpp"

namespace irvd::ir {

struct LlvmModuleText {
  std::string source_path;
  std::string content;
};

struct LiftedFunction {
  std::string original_name;
  std::string raw_body;  // "define" through the matching closing brace
  std::string source_path;
  std::size_t source_index = 0;  // 1-based position among the module's defines
  std::size_t line = 0;          // 1-based line of the define keyword
};

namespace detail {

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '$' || c == '.' ||
         c == '_';
}

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '-' || c == '$' || c == '.' ||
         c == '_';
}

// Length of the identifier body after a sigil at `pos` ('%' or '@'), counting
// quotes for the quoted form. Returns 0 when no identifier follows.
inline std::size_t sigil_ident_length(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (i >= s.size()) return 0;
  if (s[i] == '"') {
    auto close = s.find('"', i + 1);
    if (close == std::string_view::npos) return 0;
    return close - i + 1;
  }
  if (std::isdigit(static_cast<unsigned char>(s[i]))) {
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    return i - pos;
  }
  if (!is_ident_start(s[i])) return 0;
  while (i < s.size() && is_ident_char(s[i])) ++i;
  return i - pos;
}

inline std::string unquote(std::string_view ident) {
  if (ident.size() >= 2 && ident.front() == '"' && ident.back() == '"') {
    return std::string(ident.substr(1, ident.size() - 2));
  }
  return std::string(ident);
}

// Cursor over module text that steps past string literals and comments so
// that structural characters are only seen outside them.
class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  char peek() const { return text_[pos_]; }

  // Advances one structural unit. Returns the character when it is outside
  // any literal or comment, '\0' otherwise.
  char next() {
    char c = text_[pos_];
    if (c == '"') {
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\n') ++line_;
        ++pos_;
      }
      if (pos_ < text_.size()) ++pos_;
      return '\0';
    }
    if (c == ';') {
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      return '\0';
    }
    if (c == '\n') ++line_;
    ++pos_;
    return c;
  }

  // Steps over `n` raw characters known not to contain newlines.
  void advance(std::size_t n) { pos_ += n; }

  void skip_line() {
    while (!done() && peek() != '\n') next();
    if (!done()) next();
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline bool starts_keyword(std::string_view text, std::size_t pos, std::string_view kw) {
  if (text.substr(pos, kw.size()) != kw) return false;
  std::size_t end = pos + kw.size();
  return end < text.size() && std::isspace(static_cast<unsigned char>(text[end]));
}

}  // namespace detail

// Returns every top-level define block in source order. Declarations,
// globals, attribute groups and metadata are skipped. Braces inside string
// literals and comments are not counted.
inline std::vector<LiftedFunction> extract_functions(const LlvmModuleText& module) {
  using detail::Scanner;
  std::vector<LiftedFunction> out;
  const std::string_view text = module.content;
  Scanner sc(text);
  int top_depth = 0;

  while (!sc.done()) {
    // At the start of a line.
    while (!sc.done() && (sc.peek() == ' ' || sc.peek() == '\t' || sc.peek() == '\r')) sc.next();
    if (sc.done()) break;
    if (top_depth != 0 || !detail::starts_keyword(text, sc.pos(), "define")) {
      while (!sc.done() && sc.peek() != '\n') {
        char c = sc.next();
        if (c == '{') ++top_depth;
        if (c == '}' && top_depth > 0) --top_depth;
      }
      if (!sc.done()) sc.next();
      continue;
    }

    const std::size_t start = sc.pos();
    const std::size_t start_line = sc.line();
    std::string name;
    int paren = 0;
    bool params_closed = false;
    bool body_open = false;
    int depth = 0;
    std::size_t end = std::string_view::npos;

    while (!sc.done()) {
      const std::size_t at = sc.pos();
      if (!body_open && name.empty() && sc.peek() == '@') {
        std::size_t len = detail::sigil_ident_length(text, at + 1);
        if (len == 0) {
          throw Error(ErrorKind::kMalformedIdentifier,
                      module.source_path + ":" + std::to_string(sc.line()) +
                          ": '@' without a function name");
        }
        name = detail::unquote(text.substr(at + 1, len));
        sc.advance(len + 1);
        continue;
      }
      char c = sc.next();
      if (!body_open) {
        if (name.empty()) continue;
        if (c == '(') ++paren;
        if (c == ')' && --paren == 0) params_closed = true;
        if (c == '{' && params_closed && paren == 0) {
          body_open = true;
          depth = 1;
        }
        continue;
      }
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) {
        end = sc.pos();
        break;
      }
    }

    if (end == std::string_view::npos) {
      throw Error(ErrorKind::kUnbalancedBraces,
                  module.source_path + ":" + std::to_string(start_line));
    }
    if (name.empty()) {
      throw Error(ErrorKind::kMalformedIdentifier,
                  module.source_path + ":" + std::to_string(start_line) + ": define without name");
    }
    LiftedFunction f;
    f.original_name = std::move(name);
    f.raw_body = std::string(text.substr(start, end - start));
    f.source_path = module.source_path;
    f.source_index = out.size() + 1;
    f.line = start_line;
    out.push_back(std::move(f));
    sc.skip_line();
  }
  return out;
}

}  // namespace irvd::ir
