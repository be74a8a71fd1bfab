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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "irvd/corpus/build.hpp"
#include "irvd/corpus/manifest.hpp"
#include "irvd/random.hpp"

namespace irvd::corpus {
namespace {

ir::NormalizedFunction fn(const std::string& name, const std::string& hash) {
  ir::NormalizedFunction f;
  f.original_name = name;
  f.content_hash = hash;
  f.source_path = "m.ll";
  return f;
}

LabeledFunction labeled(const std::string& name, const std::string& hash, std::size_t tokens) {
  return {fn(name, hash), label_from_name(name), std::string("CWE-121"), tokens};
}

TEST(LabelFromName, JulietConvention) {
  EXPECT_EQ(label_from_name("CWE121_Stack_Based_Buffer_Overflow__char_alloca_memcpy_01_bad"), Label::kVulnerable);
  EXPECT_EQ(label_from_name("CWE121_Stack_Based_Buffer_Overflow__char_alloca_memcpy_01_goodG2B"), Label::kClean);
  EXPECT_EQ(label_from_name("CWE121_x_51b_badSink"), Label::kVulnerable);
  EXPECT_EQ(label_from_name("CWE121_x_01_good1"), Label::kClean);
  EXPECT_EQ(label_from_name("CWE121_x_01_BAD"), Label::kVulnerable);
  EXPECT_EQ(label_from_name("main"), Label::kUnlabeled);
  EXPECT_EQ(label_from_name("badge_reader"), Label::kUnlabeled);
}

TEST(SplitAssign, FloorRule) {
  std::vector<std::string> h = {"a", "b", "c", "d", "e"};
  auto s = split_assign(h, {0.9, 0.1}, 3);
  EXPECT_EQ(std::count(s.begin(), s.end(), Split::kTrain), 4);
  std::vector<std::string> big;
  for (int i = 0; i < 3802; ++i) big.push_back("h" + std::to_string(i));
  auto sb = split_assign(big, {0.8, 0.2}, 1);
  EXPECT_EQ(std::count(sb.begin(), sb.end(), Split::kTrain), 3041);
  EXPECT_EQ(std::count(sb.begin(), sb.end(), Split::kValidation), 761);
}

TEST(SplitAssign, Deterministic) {
  std::vector<std::string> h;
  for (int i = 0; i < 10; ++i) h.push_back(sha256_hex(std::to_string(i)));
  EXPECT_EQ(split_assign(h, {0.8, 0.2}, 42), split_assign(h, {0.8, 0.2}, 42));
}

TEST(SplitAssign, IndependentOfInputOrder) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> h;
    const int n = 5 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) h.push_back(sha256_hex(std::to_string(trial * 1000 + i)));
    auto base = split_assign(h, {0.8, 0.2}, 77);
    std::map<std::string, Split> expected;
    for (int i = 0; i < n; ++i) expected[h[i]] = base[i];
    auto perm = h;
    rng.shuffle(perm);
    auto s = split_assign(perm, {0.8, 0.2}, 77);
    for (int i = 0; i < n; ++i) EXPECT_EQ(s[i], expected[perm[i]]);
  }
}

TEST(SplitAssign, StratifiedKeepsLabelRatios) {
  std::vector<std::string> h;
  std::vector<Label> l;
  for (int i = 0; i < 50; ++i) {
    h.push_back(sha256_hex("s" + std::to_string(i)));
    l.push_back(i < 20 ? Label::kVulnerable : Label::kClean);
  }
  auto s = split_assign(h, {0.8, 0.2}, 5, &l);
  int vt = 0, ct = 0;
  for (int i = 0; i < 50; ++i) {
    if (s[i] == Split::kTrain) (l[i] == Label::kVulnerable ? vt : ct)++;
  }
  EXPECT_EQ(vt, 16);
  EXPECT_EQ(ct, 24);
}

TEST(SplitAssign, RejectsBadFractions) {
  EXPECT_THROW(split_assign({"a"}, {0.7, 0.2}, 1), Error);
}

TEST(EmbedderCorpus, ExcludesTaggedFunctions) {
  std::vector<ir::NormalizedFunction> fs;
  for (int i = 0; i < 100; ++i) {
    std::string name = i < 10 ? "CWE121_case_" + std::to_string(i) + "_bad" : "CWE190_case_" + std::to_string(i) + "_good";
    fs.push_back(fn(name, sha256_hex(name)));
  }
  auto m = build_embedder_corpus(fs, "CWE-121", {0.9, 0.1}, 11);
  EXPECT_EQ(m.members.size(), 90u);
  EXPECT_EQ(m.size(Split::kTrain), 81u);
  EXPECT_EQ(m.size(Split::kValidation), 9u);
  for (const auto& mem : m.members) EXPECT_EQ(mem.label, Label::kUnlabeled);
  EXPECT_NO_THROW(validate(m));

  auto none = build_embedder_corpus(fs, "CWE-999", {0.9, 0.1}, 11);
  EXPECT_EQ(none.members.size(), 100u);
}

TEST(EmbedderCorpus, EmptyAfterExclusion) {
  std::vector<ir::NormalizedFunction> fs = {fn("CWE121_a_bad", "x")};
  try {
    build_embedder_corpus(fs, "CWE-121");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyCorpus);
  }
}

TEST(ClassifierDataset, LengthFilter) {
  std::vector<LabeledFunction> fs;
  for (int i = 0; i < 10; ++i) {
    std::string name = "CWE121_c" + std::to_string(i) + (i % 2 ? "_bad" : "_goodG2B");
    fs.push_back(labeled(name, sha256_hex(name), i == 4 ? 3000 : 100));
  }
  auto m = build_classifier_dataset(fs, 2048, {0.8, 0.2}, 3);
  EXPECT_EQ(m.members.size(), 9u);
  EXPECT_EQ(m.stats["input"]["all"], 10u);
  EXPECT_EQ(m.stats["post_length_filter"]["all"], 9u);
  EXPECT_NO_THROW(validate(m));
}

TEST(ClassifierDataset, DedupeUnlabeledAndMonotoneFilter) {
  std::vector<LabeledFunction> fs = {labeled("CWE121_a_bad", "h1", 10), labeled("CWE121_b_bad", "h1", 10),
                                     labeled("CWE121_c_good", "h2", 500), labeled("helper", "h3", 5),
                                     labeled("CWE121_d_good", "h4", 50)};
  auto m = build_classifier_dataset(fs, 2048);
  EXPECT_EQ(m.members.size(), 3u);
  EXPECT_EQ(m.stats["post_dedupe"]["all"], 3u);
  std::size_t prev = m.members.size();
  for (std::size_t max : {400, 40}) {
    std::size_t n = 0;
    try {
      n = build_classifier_dataset(fs, max).members.size();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kSingleClassDataset);
    }
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(ClassifierDataset, SingleClass) {
  std::vector<LabeledFunction> fs = {labeled("CWE121_a_bad", "h1", 10), labeled("CWE121_b_bad", "h2", 10)};
  try {
    build_classifier_dataset(fs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSingleClassDataset);
  }
}

TEST(Manifest, JsonRoundTripAndSelfConsistency) {
  std::vector<LabeledFunction> fs;
  for (int i = 0; i < 30; ++i) {
    std::string name = "CWE121_r" + std::to_string(i) + (i % 3 ? "_goodG2B" : "_bad");
    fs.push_back(labeled(name, sha256_hex(name), 10));
  }
  auto m = build_classifier_dataset(fs, 2048, {0.8, 0.2}, 99);
  auto back = manifest_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back, m);
  EXPECT_EQ(recount(m.members), m.counts);
  EXPECT_EQ(m.size(Split::kTrain) + m.size(Split::kValidation), m.members.size());

  auto broken = to_json(m);
  broken["counts"]["clean"]["train"] = 0;
  EXPECT_THROW(manifest_from_json(broken), Error);
}

}  // namespace
}  // namespace irvd::corpus
