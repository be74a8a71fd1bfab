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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/ir/extract.hpp"
#include "irvd/ir/normalize.hpp"

namespace irvd::ir {

// One line of fn.jsonl.
struct FunctionRecord {
  std::string hash;
  std::string name;  // original (pre-normalization) function name
  std::string text;  // canonical text
  std::string source;
  std::size_t ordinal = 0;  // position of the define inside its module
};

inline FunctionRecord to_record(const NormalizedFunction& nf) {
  return {nf.content_hash, nf.original_name, nf.canonical_text, nf.source_path, nf.source_index};
}

inline NormalizedFunction from_record(const FunctionRecord& r) {
  NormalizedFunction nf;
  nf.canonical_text = r.text;
  nf.content_hash = r.hash;
  nf.original_name = r.name;
  nf.source_path = r.source;
  nf.source_index = r.ordinal;
  return nf;
}

inline std::string to_jsonl(const std::vector<FunctionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = {{"hash", r.hash},
                        {"name", r.name},
                        {"text", r.text},
                        {"source", r.source},
                        {"ordinal", r.ordinal}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<FunctionRecord> parse_jsonl(std::string_view content) {
  std::vector<FunctionRecord> out;
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++lineno;
    auto line = content.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("hash").get<std::string>(), j.at("name").get<std::string>(),
                     j.at("text").get<std::string>(), j.at("source").get<std::string>(),
                     j.at("ordinal").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, "fn.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_jsonl(const std::string& path, const std::vector<FunctionRecord>& records) {
  write_file(path, to_jsonl(records));
}

inline std::vector<FunctionRecord> read_jsonl(const std::string& path) {
  return parse_jsonl(read_file(path));
}

// Every *.ll file under `dir`, sorted by path so enumeration order never
// leaks into results.
inline std::vector<LlvmModuleText> load_modules(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kMissingArtifact, "input directory " + dir);
  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ll") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<LlvmModuleText> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    LlvmModuleText m{fs::relative(p, dir).generic_string(), read_file(p)};
    if (m.content.empty() || !is_valid_utf8(m.content)) {
      throw Error(ErrorKind::kFormat, p + ": module text must be non-empty UTF-8");
    }
    out.push_back(std::move(m));
  }
  return out;
}

// "CWE-121" from names like "CWE121_Stack_Based..." or paths containing
// "CWE-121"; nullopt when neither carries a tag.
inline std::optional<std::string> cwe_tag(const std::string& name, const std::string& source) {
  static const std::regex re("CWE-?([0-9]+)", std::regex::icase);
  std::smatch m;
  if (std::regex_search(name, m, re) || std::regex_search(source, m, re)) {
    return "CWE-" + m[1].str();
  }
  return std::nullopt;
}

}  // namespace irvd::ir
