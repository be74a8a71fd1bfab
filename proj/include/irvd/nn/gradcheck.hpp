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

// Central finite-difference check of analytic gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "irvd/nn/tensor.hpp"

namespace irvd::nn {

struct GradCheckResult {
  double max_rel_error = 0;
  std::string worst;  // "name[index]" of the worst entry
  std::size_t checked = 0;
};

// Compares p->grad (already filled by the caller) against
// (loss(w + h) - loss(w - h)) / 2h for every entry of every parameter.
// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps entries
// whose true gradient is ~0 from dividing by rounding noise.
inline GradCheckResult check_gradients(const ParamList<double>& ps, const std::function<double()>& loss,
                                       double h = 1e-5, double floor = 1e-6) {
  GradCheckResult r;
  for (auto* p : ps) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = p->name + "[" + std::to_string(i) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

}  // namespace irvd::nn
