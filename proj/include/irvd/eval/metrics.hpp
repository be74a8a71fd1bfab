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

// Binary classification metrics. The positive class is "vulnerable".

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "irvd/common.hpp"

namespace irvd::eval {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }

  void add(bool predicted_positive, bool actual_positive) {
    if (predicted_positive) {
      ++(actual_positive ? tp : fp);
    } else {
      ++(actual_positive ? fn : tn);
    }
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

struct Scores {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

// F1 as the harmonic mean of precision and recall; 0 when both are 0.
inline double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0 ? 2 * precision * recall / s : 0.0;
}

inline Scores metrics(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw Error(ErrorKind::kEmptyEvaluation, "confusion matrix is empty");
  Scores s;
  s.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(n);
  s.precision = cm.tp + cm.fp > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp) : 0.0;
  s.recall = cm.tp + cm.fn > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

// Per-epoch record of one training run. Loss and the four scores are on the
// validation split; the train_* fields describe the epoch's training pass.
struct MetricsRecord {
  int epoch = 0;
  double loss = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  ConfusionMatrix confusion;
  double train_loss = 0;
  double train_accuracy = 0;
};

inline MetricsRecord make_record(int epoch, double loss, const ConfusionMatrix& cm) {
  auto s = metrics(cm);
  MetricsRecord r;
  r.epoch = epoch;
  r.loss = loss;
  r.accuracy = s.accuracy;
  r.precision = s.precision;
  r.recall = s.recall;
  r.f1 = s.f1;
  r.confusion = cm;
  return r;
}

inline nlohmann::json to_json(const MetricsRecord& r) {
  return {{"epoch", r.epoch},
          {"loss", r.loss},
          {"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
          {"train_loss", r.train_loss},
          {"train_accuracy", r.train_accuracy}};
}

inline MetricsRecord metrics_record_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.loss = j.at("loss").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  if (j.contains("confusion")) {
    const auto& c = j["confusion"];
    r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                   c.at("fn").get<std::size_t>()};
  }
  r.train_loss = j.value("train_loss", 0.0);
  r.train_accuracy = j.value("train_accuracy", 0.0);
  return r;
}

// Accuracy of always predicting the most frequent label.
inline double majority_fraction(std::size_t positives, std::size_t negatives) {
  const std::size_t n = positives + negatives;
  if (n == 0) throw Error(ErrorKind::kEmptyEvaluation, "no samples for majority fraction");
  return static_cast<double>(std::max(positives, negatives)) / static_cast<double>(n);
}

enum class Verdict { kImproved, kNa };

inline const char* to_string(Verdict v) { return v == Verdict::kImproved ? "improved" : "NA"; }

inline constexpr double kNaTolerance = 1e-9;

// NA when no epoch's validation accuracy beats the majority-class fraction
// by more than kNaTolerance.
inline Verdict na_verdict(const std::vector<MetricsRecord>& per_epoch, double majority) {
  if (per_epoch.empty()) throw Error(ErrorKind::kEmptyEvaluation, "run has no epochs");
  double best = 0;
  for (const auto& r : per_epoch) best = std::max(best, r.accuracy);
  return best <= majority + kNaTolerance ? Verdict::kNa : Verdict::kImproved;
}

// Highest validation accuracy; ties go to the lower validation loss, then
// to the earlier epoch. Returns an index into per_epoch.
inline std::size_t best_epoch_index(const std::vector<MetricsRecord>& per_epoch) {
  if (per_epoch.empty()) throw Error(ErrorKind::kEmptyEvaluation, "run has no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < per_epoch.size(); ++i) {
    const auto& a = per_epoch[i];
    const auto& b = per_epoch[best];
    if (a.accuracy > b.accuracy || (a.accuracy == b.accuracy && a.loss < b.loss)) best = i;
  }
  return best;
}

}  // namespace irvd::eval
