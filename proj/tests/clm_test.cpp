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

#include "irvd/embed/clm.hpp"

namespace irvd::embed {
namespace {

TransformerConfig small() {
  TransformerConfig c;
  c.n_layers = 2;
  c.d_model = 32;
  c.n_heads = 4;
  c.d_ff = 128;
  c.max_positions = 16;
  c.vocab_size = 24;
  c.dropout = 0.0;
  return c;
}

// Ten sequences whose first tokens differ, so every later token is a
// deterministic function of its prefix and the loss can approach zero.
std::vector<std::vector<TokenId>> memorization_set() {
  Rng rng(5);
  std::vector<std::vector<TokenId>> seqs;
  for (int s = 0; s < 10; ++s) {
    std::vector<TokenId> ids{static_cast<TokenId>(s)};
    for (int t = 0; t < 9; ++t) ids.push_back(static_cast<TokenId>(rng.below(24)));
    seqs.push_back(ids);
  }
  return seqs;
}

TEST(TrainClm, MemorizesTenSequences) {
  auto seqs = memorization_set();
  ClmTrainOptions o;
  o.epochs = 400;
  o.batch_size = 10;
  o.learning_rate = 1e-2;
  o.warmup_steps = 10;
  o.eval_every = 50;
  o.seed = 3;
  auto r = train_clm<float>(small(), seqs, seqs, o);
  EXPECT_EQ(r.total_steps, 400);
  ASSERT_FALSE(r.log.empty());
  EXPECT_LT(r.log.back().train_loss, 0.05);
  EXPECT_LT(clm_eval_loss(r.best.model, seqs), 0.05);
  // Logged rows are in step order and the checkpoint is the minimum.
  double best = 1e9;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    if (i > 0) EXPECT_GT(r.log[i].step, r.log[i - 1].step);
    best = std::min(best, r.log[i].val_loss);
  }
  EXPECT_EQ(r.best.val_loss, best);
}

TEST(TrainClm, DeterministicForSeed) {
  auto seqs = memorization_set();
  ClmTrainOptions o;
  o.epochs = 3;
  o.batch_size = 4;
  o.eval_every = 2;
  o.seed = 9;
  auto a = train_clm<float>(small(), seqs, seqs, o);
  auto b = train_clm<float>(small(), seqs, seqs, o);
  EXPECT_EQ(checkpoint_digest(a.best.model), checkpoint_digest(b.best.model));
  EXPECT_EQ(clm_log_csv(a.log), clm_log_csv(b.log));
  EXPECT_EQ(clm_log_csv(a.log).rfind("step,train_loss,train_loss_ma100,val_loss\n", 0), 0u);
}

TEST(TrainClm, Errors) {
  auto seqs = memorization_set();
  ClmTrainOptions o;
  o.epochs = 1;
  try {
    train_clm<float>(small(), {}, seqs, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptySplit);
  }
  EXPECT_THROW(train_clm<float>(small(), seqs, {}, o), Error);

  o.epochs = 50;
  o.learning_rate = 1e30;
  o.warmup_steps = 0;
  o.grad_clip = 1e30;
  try {
    train_clm<float>(small(), seqs, seqs, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergedLoss);
  }
}

}  // namespace
}  // namespace irvd::embed
