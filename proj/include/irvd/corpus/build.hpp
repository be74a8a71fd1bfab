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

// Dataset construction: naming-convention labels, reproducible splits and
// the two manifests (embedder corpus, classifier dataset).

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/corpus/manifest.hpp"
#include "irvd/ir/normalize.hpp"
#include "irvd/ir/records.hpp"
#include "irvd/random.hpp"

namespace irvd::corpus {

struct LabeledFunction {
  ir::NormalizedFunction function;
  Label label = Label::kUnlabeled;
  std::optional<std::string> cwe;
  std::size_t token_length = 0;
};

struct SplitFractions {
  double train = 0.8;
  double validation = 0.2;
};

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// "bad", "badSink", "bad1" match prefix "bad"; "badge" does not.
inline bool segment_matches(const std::string& seg, std::string_view prefix) {
  if (seg.size() < prefix.size() || lower(seg.substr(0, prefix.size())) != prefix) return false;
  if (seg.size() == prefix.size()) return true;
  char next = seg[prefix.size()];
  return std::isupper(static_cast<unsigned char>(next)) || std::isdigit(static_cast<unsigned char>(next));
}

inline std::vector<std::string> segments(const std::string& name) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::size_t floor_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace detail

// Juliet convention: a "bad" name segment marks the vulnerable variant,
// "good"/"goodG2B"/"good1"/... the mitigated one.
inline Label label_from_name(const std::string& original_name) {
  auto segs = detail::segments(original_name);
  for (const auto& s : segs) {
    if (detail::segment_matches(s, "bad")) return Label::kVulnerable;
  }
  for (const auto& s : segs) {
    if (detail::segment_matches(s, "good")) return Label::kClean;
  }
  return Label::kUnlabeled;
}

// Assigns train/validation to each hash (result aligned with input). The
// hashes are sorted before the seeded shuffle, so the outcome depends only
// on the set of hashes, the fractions and the seed. Train receives
// floor(n * train_fraction); validation gets the remainder. With `labels`,
// the rule is applied within each label separately.
inline std::vector<Split> split_assign(const std::vector<std::string>& hashes,
                                       const SplitFractions& fractions, std::uint64_t seed,
                                       const std::vector<Label>* labels = nullptr) {
  if (std::abs(fractions.train + fractions.validation - 1.0) > 1e-9 || fractions.train < 0 ||
      fractions.validation < 0) {
    throw Error(ErrorKind::kConfigInvalid, "split fractions must be non-negative and sum to 1");
  }
  std::vector<Split> out(hashes.size(), Split::kValidation);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    int key = labels != nullptr ? static_cast<int>((*labels)[i]) : 0;
    groups[key].push_back(i);
  }
  Rng rng(seed);
  for (auto& [key, idx] : groups) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return hashes[a] < hashes[b];
    });
    rng.shuffle(idx);
    std::size_t n_train = detail::floor_count(idx.size(), fractions.train);
    for (std::size_t k = 0; k < n_train; ++k) out[idx[k]] = Split::kTrain;
  }
  return out;
}

inline CorpusManifest make_manifest(Purpose purpose, std::vector<std::string> hashes,
                                    std::vector<Label> labels, const SplitFractions& fractions,
                                    std::uint64_t seed, bool stratify) {
  auto splits = split_assign(hashes, fractions, seed, stratify ? &labels : nullptr);
  CorpusManifest m;
  m.purpose = purpose;
  m.split_seed = seed;
  m.train_fraction = fractions.train;
  m.validation_fraction = fractions.validation;
  m.stratified = stratify;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    m.members.push_back({std::move(hashes[i]), labels[i], splits[i]});
  }
  m.counts = recount(m.members);
  return m;
}

// Unlabeled corpus for language-model training: everything except functions
// tagged with `exclusion` (e.g. "CWE-121").
inline CorpusManifest build_embedder_corpus(const std::vector<ir::NormalizedFunction>& functions,
                                            const std::string& exclusion = "CWE-121",
                                            const SplitFractions& fractions = {0.9, 0.1},
                                            std::uint64_t seed = 0) {
  std::vector<std::string> hashes;
  std::unordered_set<std::string> seen;
  std::size_t excluded = 0;
  for (const auto& f : functions) {
    auto tag = ir::cwe_tag(f.original_name, f.source_path);
    if (tag && *tag == exclusion) {
      ++excluded;
      continue;
    }
    if (seen.insert(f.content_hash).second) hashes.push_back(f.content_hash);
  }
  if (hashes.empty()) throw Error(ErrorKind::kEmptyCorpus, "no functions left after excluding " + exclusion);
  std::vector<Label> labels(hashes.size(), Label::kUnlabeled);
  auto m = make_manifest(Purpose::kEmbedder, std::move(hashes), std::move(labels), fractions, seed, false);
  m.stats["input"]["all"] = functions.size();
  m.stats["excluded"]["all"] = excluded;
  m.stats["members"]["all"] = m.members.size();
  return m;
}

// Labeled dataset for the classifier: drops unlabeled functions, removes
// duplicates (first occurrence wins), drops functions longer than
// `max_tokens`, then splits.
inline CorpusManifest build_classifier_dataset(const std::vector<LabeledFunction>& functions,
                                               std::size_t max_tokens = 2048,
                                               const SplitFractions& fractions = {0.8, 0.2},
                                               std::uint64_t seed = 0, bool stratify = false) {
  std::map<std::string, std::map<std::string, std::size_t>> stats;
  auto tally = [&](const char* stage, Label l) {
    ++stats[stage][to_string(l)];
    ++stats[stage]["all"];
  };
  std::vector<std::string> hashes;
  std::vector<Label> labels;
  std::unordered_set<std::string> seen;
  for (const auto& f : functions) {
    if (f.label == Label::kUnlabeled) continue;
    tally("input", f.label);
    if (!seen.insert(f.function.content_hash).second) continue;
    tally("post_dedupe", f.label);
    if (f.token_length > max_tokens) continue;
    tally("post_length_filter", f.label);
    hashes.push_back(f.function.content_hash);
    labels.push_back(f.label);
  }
  if (hashes.empty()) throw Error(ErrorKind::kEmptyCorpus, "no labeled functions survive filtering");
  if (std::all_of(labels.begin(), labels.end(), [&](Label l) { return l == labels.front(); })) {
    throw Error(ErrorKind::kSingleClassDataset,
                std::string("only '") + to_string(labels.front()) + "' functions survive filtering");
  }
  auto m = make_manifest(Purpose::kClassifier, std::move(hashes), std::move(labels), fractions, seed, stratify);
  m.stats = std::move(stats);
  return m;
}

}  // namespace irvd::corpus
