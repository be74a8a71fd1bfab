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

#include "irvd/nn/optim.hpp"

namespace irvd::nn {
namespace {

Mat<double> scalar(double v) { return Mat<double>::Constant(1, 1, v); }

TEST(SgdMomentum, TwoStepRecurrence) {
  auto p = scalar(1.0), g = scalar(2.0), v = scalar(0.0);
  sgd_momentum_step(p, g, v, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(v(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.8);
  sgd_momentum_step(p, g, v, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(v(0, 0), 3.8);
  EXPECT_NEAR(p(0, 0), 0.42, 1e-15);
}

TEST(SgdMomentum, ZeroMomentumIsPlainSgd) {
  Mat<double> p(2, 2), g(2, 2), v = Mat<double>::Zero(2, 2);
  p << 1, 2, 3, 4;
  g << 0.5, -1, 2, 0;
  Mat<double> expected = p - 3 * 0.05 * g;
  for (int i = 0; i < 3; ++i) sgd_momentum_step(p, g, v, 0.05, 0.0);
  EXPECT_TRUE(p.isApprox(expected, 1e-15));
}

TEST(SgdMomentum, ZeroLearningRateLeavesParams) {
  auto p = scalar(3.25), g = scalar(-7.0), v = scalar(0.5);
  sgd_momentum_step(p, g, v, 0.0, 0.9);
  EXPECT_EQ(p(0, 0), 3.25);
}

TEST(SgdMomentum, ShapeMismatch) {
  Mat<double> p = Mat<double>::Zero(2, 2), g = Mat<double>::Zero(2, 1), v = Mat<double>::Zero(2, 2);
  try {
    sgd_momentum_step(p, g, v, 0.1, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Param<double> w("w", 1, 3);
  w.value << 1, 1, 1;
  w.grad << 4, -0.5, 1e-3;
  Adam<double> adam(0.01, 0.9, 0.999, 1e-12);
  adam.step({&w});
  // Bias-corrected m/sqrt(v) equals sign(g) on the first step.
  EXPECT_NEAR(w.value(0, 0), 0.99, 1e-9);
  EXPECT_NEAR(w.value(0, 1), 1.01, 1e-9);
  EXPECT_NEAR(w.value(0, 2), 0.99, 1e-8);
}

TEST(Optimizer, FactoryFollowsSpec) {
  Param<double> w("w", 1, 1);
  w.value(0, 0) = 1.0;
  w.grad(0, 0) = 2.0;
  OptimizerSpec sgd;
  sgd.kind = OptimizerSpec::Kind::kSgdMomentum;
  sgd.learning_rate = 0.1;
  sgd.momentum = 0.9;
  auto opt = make_optimizer<double>(sgd);
  opt->step({&w});
  opt->step({&w});
  EXPECT_NEAR(w.value(0, 0), 0.42, 1e-15);
}

TEST(OptimizerSpec, LabelsAndJson) {
  OptimizerSpec s;
  s.kind = OptimizerSpec::Kind::kSgdMomentum;
  s.learning_rate = 0.0001;
  s.momentum = 0.01;
  EXPECT_EQ(s.label(), "SGD -LR: 0.0001 -Mom: 0.01");
  auto back = optimizer_from_json(to_json(s));
  EXPECT_EQ(back.label(), s.label());
  OptimizerSpec a;
  a.kind = OptimizerSpec::Kind::kAdam;
  a.learning_rate = 0.001;
  EXPECT_EQ(a.label(), "Adam -LR: 0.001");
  a.learning_rate = 0;
  EXPECT_THROW(a.validate(), Error);
  s.momentum = -1;
  EXPECT_THROW(s.validate(), Error);
}

}  // namespace
}  // namespace irvd::nn
