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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "irvd/common.hpp"

namespace irvd::corpus {

enum class Label { kVulnerable, kClean, kUnlabeled };
enum class Split { kTrain, kValidation };
enum class Purpose { kEmbedder, kClassifier };

inline const char* to_string(Label l) {
  switch (l) {
    case Label::kVulnerable: return "vulnerable";
    case Label::kClean: return "clean";
    case Label::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

inline const char* to_string(Split s) { return s == Split::kTrain ? "train" : "validation"; }
inline const char* to_string(Purpose p) { return p == Purpose::kEmbedder ? "embedder" : "classifier"; }

inline Label parse_label(const std::string& s) {
  if (s == "vulnerable") return Label::kVulnerable;
  if (s == "clean") return Label::kClean;
  if (s == "unlabeled") return Label::kUnlabeled;
  throw Error(ErrorKind::kFormat, "unknown label '" + s + "'");
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation") return Split::kValidation;
  throw Error(ErrorKind::kFormat, "unknown split '" + s + "'");
}

inline Purpose parse_purpose(const std::string& s) {
  if (s == "embedder") return Purpose::kEmbedder;
  if (s == "classifier") return Purpose::kClassifier;
  throw Error(ErrorKind::kFormat, "unknown purpose '" + s + "'");
}

struct ManifestMember {
  std::string hash;
  Label label = Label::kUnlabeled;
  Split split = Split::kTrain;

  bool operator==(const ManifestMember&) const = default;
};

using Counts = std::map<std::string, std::map<std::string, std::size_t>>;

struct CorpusManifest {
  int version = 1;
  Purpose purpose = Purpose::kEmbedder;
  std::vector<ManifestMember> members;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.0;
  double validation_fraction = 0.0;
  bool stratified = false;
  Counts counts;
  // Dataset-construction tallies ("input", "post_dedupe", ...), per label.
  std::map<std::string, std::map<std::string, std::size_t>> stats;

  bool operator==(const CorpusManifest&) const = default;

  std::vector<std::string> hashes(Split s) const {
    std::vector<std::string> out;
    for (const auto& m : members) {
      if (m.split == s) out.push_back(m.hash);
    }
    return out;
  }

  std::size_t size(Split s) const {
    std::size_t n = 0;
    for (const auto& m : members) n += (m.split == s);
    return n;
  }
};

inline Counts recount(const std::vector<ManifestMember>& members) {
  Counts c;
  for (const auto& m : members) ++c[to_string(m.label)][to_string(m.split)];
  return c;
}

// Throws kFormat describing the first violated invariant.
inline void validate(const CorpusManifest& m) {
  std::set<std::string> seen;
  for (const auto& mem : m.members) {
    if (!seen.insert(mem.hash).second) {
      throw Error(ErrorKind::kFormat, "manifest lists " + mem.hash + " twice");
    }
    if (m.purpose == Purpose::kEmbedder && mem.label != Label::kUnlabeled) {
      throw Error(ErrorKind::kFormat, "embedder manifest member carries a label");
    }
  }
  if (recount(m.members) != m.counts) {
    throw Error(ErrorKind::kFormat, "manifest counts disagree with members");
  }
}

inline nlohmann::json to_json(const CorpusManifest& m) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& mem : m.members) {
    members.push_back({{"hash", mem.hash}, {"label", to_string(mem.label)}, {"split", to_string(mem.split)}});
  }
  return {{"version", m.version},
          {"purpose", to_string(m.purpose)},
          {"members", members},
          {"split_seed", m.split_seed},
          {"split_fractions", {{"train", m.train_fraction}, {"validation", m.validation_fraction}}},
          {"stratified", m.stratified},
          {"counts", m.counts},
          {"stats", m.stats}};
}

inline CorpusManifest manifest_from_json(const nlohmann::json& j) {
  try {
    CorpusManifest m;
    m.version = j.at("version").get<int>();
    m.purpose = parse_purpose(j.at("purpose").get<std::string>());
    for (const auto& mem : j.at("members")) {
      m.members.push_back({mem.at("hash").get<std::string>(),
                           parse_label(mem.at("label").get<std::string>()),
                           parse_split(mem.at("split").get<std::string>())});
    }
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.train_fraction = j.at("split_fractions").at("train").get<double>();
    m.validation_fraction = j.at("split_fractions").at("validation").get<double>();
    m.stratified = j.value("stratified", false);
    m.counts = j.at("counts").get<Counts>();
    if (j.contains("stats")) m.stats = j.at("stats").get<decltype(m.stats)>();
    validate(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("manifest: ") + e.what());
  }
}

inline void save_manifest(const std::string& path, const CorpusManifest& m) {
  write_file(path, to_json(m).dump(2) + "\n");
}

inline CorpusManifest load_manifest(const std::string& path) {
  try {
    return manifest_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, path + ": " + e.what());
  }
}

}  // namespace irvd::corpus
