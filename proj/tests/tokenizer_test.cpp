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

#include <filesystem>

#include "irvd/random.hpp"
#include "irvd/tokenizer/bpe.hpp"

namespace irvd::tokenizer {
namespace {

std::vector<std::string> ir_corpus() {
  return {"define void @func_1(i8* %v1) {\nlabel_1:\n%v2 = alloca [10 x i8], align 1\nret void\n}",
          "define i32 @func_1(i32 %v1) {\n%v2 = add i32 %v1, 1\n%v3 = mul i32 %v2, %v2\nret i32 %v3\n}",
          "define void @func_1() {\n%v1 = alloca [64 x i8], align 16\ncall void @g1(i8* %v1)\nret void\n}",
          "define i64 @func_1(i64 %v1, i64 %v2) {\n%v3 = icmp ugt i64 %v1, %v2\nbr i1 %v3, label %label_1, "
          "label %label_2\nlabel_1:\nret i64 %v1\nlabel_2:\nret i64 %v2\n}"};
}

std::string random_bytes(Rng& rng, std::size_t max_len) {
  std::string s(rng.below(max_len + 1), '\0');
  for (auto& c : s) c = static_cast<char>(rng.below(256));
  return s;
}

TEST(TrainBpe, FirstMergeOnRepeatedPair) {
  // "aaab" pretokenizes to a single chunk with pairs (a,a) x2 and (a,b) x1;
  // over two copies that is 4 against 2, so (a,a) is merged first.
  auto m = TokenizerModel::train({"aaab", "aaab"}, {kBaseVocab + 1, 2});
  ASSERT_EQ(m.merges().size(), 1u);
  EXPECT_EQ(m.token_bytes(m.merges()[0].first), "a");
  EXPECT_EQ(m.token_bytes(m.merges()[0].second), "a");
  EXPECT_EQ(m.token_bytes(static_cast<TokenId>(kBaseVocab)), "aa");
  EXPECT_EQ(m.encode("aaab").size(), 3u);
}

TEST(TrainBpe, TieGoesToLexicographicallySmallerPair) {
  // (a,b) and (c,d) both occur twice; (a,b) sorts first.
  auto m = TokenizerModel::train({"ab", "cd", "cd", "ab"}, {kBaseVocab + 1, 2});
  ASSERT_EQ(m.merges().size(), 1u);
  EXPECT_EQ(m.token_bytes(static_cast<TokenId>(kBaseVocab)), "ab");
}

TEST(TrainBpe, BaseBudgetMeansNoMerges) {
  auto m = TokenizerModel::train(ir_corpus(), {static_cast<std::size_t>(kBaseVocab), 2});
  EXPECT_TRUE(m.merges().empty());
  EXPECT_EQ(m.vocab_size(), static_cast<std::size_t>(kBaseVocab));
  EXPECT_EQ(m.encode("abc").size(), 3u);
  EXPECT_THROW(TokenizerModel::train(ir_corpus(), {100, 2}), Error);
}

TEST(TrainBpe, CorpusTooSmall) {
  try {
    TokenizerModel::train({"ab"}, {300, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCorpusTooSmall);
  }
}

TEST(TrainBpe, VocabBoundAndDenseIds) {
  for (std::size_t budget : {261, 280, 320, 5000}) {
    auto m = TokenizerModel::train(ir_corpus(), {budget, 2});
    EXPECT_LE(m.vocab_size(), budget);
    EXPECT_EQ(m.vocab_size(), static_cast<std::size_t>(kBaseVocab) + m.merges().size());
    for (std::size_t i = 0; i < m.merges().size(); ++i) {
      auto [a, b] = m.merges()[i];
      EXPECT_EQ(m.token_bytes(static_cast<TokenId>(kBaseVocab + i)), m.token_bytes(a) + m.token_bytes(b));
    }
  }
}

TEST(TrainBpe, Deterministic) {
  auto a = TokenizerModel::train(ir_corpus(), {400, 2});
  auto b = TokenizerModel::train(ir_corpus(), {400, 2});
  EXPECT_EQ(a.vocab_json(), b.vocab_json());
  EXPECT_EQ(a.merges_txt(), b.merges_txt());
}

TEST(TrainBpe, MoreMergesNeverLengthen) {
  auto corpus = ir_corpus();
  auto small = TokenizerModel::train(corpus, {280, 2});
  auto large = TokenizerModel::train(corpus, {400, 2});
  Rng rng(4);
  for (const auto& text : corpus) EXPECT_LE(large.encode(text).size(), small.encode(text).size());
  for (int i = 0; i < 200; ++i) {
    auto s = random_bytes(rng, 40);
    EXPECT_LE(large.encode(s).size(), small.encode(s).size());
  }
}

TEST(Encode, RoundTripRandomBytes) {
  auto m = TokenizerModel::train(ir_corpus(), {400, 2});
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto s = random_bytes(rng, 64);
    ASSERT_EQ(m.decode(m.encode(s)), s);
  }
  EXPECT_TRUE(m.encode("").empty());
  EXPECT_EQ(m.decode({}), "");
}

TEST(Encode, FramingAndLongInput) {
  auto m = TokenizerModel::train(ir_corpus(), {400, 2});
  auto framed = m.encode_framed("ret void");
  EXPECT_EQ(framed.front(), m.specials().bos);
  EXPECT_EQ(framed.back(), m.specials().eos);
  EXPECT_EQ(m.decode(framed), "ret void");

  std::string long_text;
  for (int i = 0; i < 3000; ++i) long_text += "%v" + std::to_string(i) + " = add i32 1, 2\n";
  auto ids = m.encode(long_text);
  EXPECT_GT(ids.size(), m.max_len());
  EXPECT_EQ(m.decode(ids), long_text);
  EXPECT_EQ(m.encode_framed(long_text).size(), m.max_len());
}

TEST(Decode, UnknownId) {
  TokenizerModel m;
  try {
    m.decode({5, static_cast<TokenId>(m.vocab_size())});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownId);
  }
  EXPECT_THROW(m.decode({-1}), Error);
}

TEST(Serialization, SaveLoadByteStable) {
  auto m = TokenizerModel::train(ir_corpus(), {420, 2});
  auto dir = std::filesystem::temp_directory_path() / "irvd_tok_test";
  std::filesystem::remove_all(dir);
  m.save(dir.string());
  auto back = TokenizerModel::load(dir.string());
  EXPECT_EQ(back.vocab_json(), m.vocab_json());
  EXPECT_EQ(back.merges_txt(), m.merges_txt());
  for (const auto& t : ir_corpus()) EXPECT_EQ(back.encode(t), m.encode(t));
  EXPECT_EQ(read_file((dir / "merges.txt").string()), m.merges_txt());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace irvd::tokenizer
