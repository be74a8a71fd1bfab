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

// Classifier training on top of a frozen or trainable embedder.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irvd/classify/lstm.hpp"
#include "irvd/common.hpp"
#include "irvd/embed/transformer.hpp"
#include "irvd/eval/metrics.hpp"
#include "irvd/nn/optim.hpp"
#include "irvd/random.hpp"

namespace irvd::classify {

using tokenizer::TokenId;

// Maps token ids to per-token vectors. Training-mode calls are keyed by a
// batch slot so several sequences can be in flight before backward().
template <typename T>
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual int dim() const = 0;
  virtual Mat<T> embed(std::span<const TokenId> ids) const = 0;
  virtual ParamList<T> params() = 0;
  virtual Mat<T> forward_train(std::size_t slot, std::span<const TokenId> ids, Rng* rng) = 0;
  virtual void backward(std::size_t slot, const Mat<T>& d_out) = 0;
  std::string digest() { return nn::weights_digest(params()); }
};

template <typename T>
class TransformerSource final : public EmbeddingSource<T> {
 public:
  explicit TransformerSource(embed::Transformer<T>& model) : model_(model) {}
  int dim() const override { return model_.config().d_model; }
  Mat<T> embed(std::span<const TokenId> ids) const override { return model_.embed(ids); }
  ParamList<T> params() override { return model_.params(); }
  Mat<T> forward_train(std::size_t slot, std::span<const TokenId> ids, Rng* rng) override {
    if (caches_.size() <= slot) caches_.resize(slot + 1);
    return model_.forward(ids, &caches_[slot], rng);
  }
  void backward(std::size_t slot, const Mat<T>& d_out) override { model_.backward(caches_.at(slot), d_out); }

 private:
  embed::Transformer<T>& model_;
  std::vector<typename embed::Transformer<T>::Cache> caches_;
};

// A plain lookup table (word2vec output).
template <typename T>
class TableSource final : public EmbeddingSource<T> {
 public:
  explicit TableSource(Mat<T> table) : table_("w2v.embedding", table.rows(), table.cols()) {
    table_.value = std::move(table);
  }
  int dim() const override { return static_cast<int>(table_.value.cols()); }
  Mat<T> embed(std::span<const TokenId> ids) const override {
    Mat<T> out(static_cast<Eigen::Index>(ids.size()), table_.value.cols());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (ids[t] < 0 || ids[t] >= table_.value.rows()) throw Error(ErrorKind::kUnknownId, "token id " + std::to_string(ids[t]));
      out.row(static_cast<Eigen::Index>(t)) = table_.value.row(ids[t]);
    }
    return out;
  }
  ParamList<T> params() override { return {&table_}; }
  Mat<T> forward_train(std::size_t slot, std::span<const TokenId> ids, Rng*) override {
    if (ids_.size() <= slot) ids_.resize(slot + 1);
    ids_[slot].assign(ids.begin(), ids.end());
    return embed(ids);
  }
  void backward(std::size_t slot, const Mat<T>& d_out) override {
    const auto& ids = ids_.at(slot);
    for (std::size_t t = 0; t < ids.size(); ++t) table_.grad.row(ids[t]) += d_out.row(static_cast<Eigen::Index>(t));
  }
  const Mat<T>& table() const { return table_.value; }

 private:
  Param<T> table_;
  std::vector<std::vector<TokenId>> ids_;
};

struct Example {
  std::vector<TokenId> ids;
  bool vulnerable = false;
};

struct TrainRun {
  std::string name;
  ClassifierConfig config;
  std::string embedder_kind;
  std::string embedder_ref;
  std::string manifest_ref;
  std::uint64_t seed = 0;
  std::vector<eval::MetricsRecord> per_epoch;
  std::optional<int> best_epoch;  // empty when the verdict is NA
  eval::Verdict verdict = eval::Verdict::kNa;
  double majority_fraction = 0;
  std::string status = "completed";  // or "diverged"
  std::string embedder_digest_before;
  std::string embedder_digest_after;

  const eval::MetricsRecord* best() const {
    if (!best_epoch) return nullptr;
    for (const auto& r : per_epoch) {
      if (r.epoch == *best_epoch) return &r;
    }
    return nullptr;
  }
};

inline nlohmann::json to_json(const TrainRun& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.per_epoch) epochs.push_back(eval::to_json(e));
  return {{"name", r.name},
          {"config", to_json(r.config)},
          {"embedder_kind", r.embedder_kind},
          {"embedder_ref", r.embedder_ref},
          {"manifest_ref", r.manifest_ref},
          {"seed", r.seed},
          {"per_epoch", epochs},
          {"best_epoch", r.best_epoch ? nlohmann::json(*r.best_epoch) : nlohmann::json("NA")},
          {"verdict", eval::to_string(r.verdict)},
          {"majority_fraction", r.majority_fraction},
          {"status", r.status},
          {"embedder_digest_before", r.embedder_digest_before},
          {"embedder_digest_after", r.embedder_digest_after}};
}

inline TrainRun train_run_from_json(const nlohmann::json& j) {
  TrainRun r;
  r.name = j.at("name").get<std::string>();
  r.config = classifier_config_from_json(j.at("config"));
  r.embedder_kind = j.value("embedder_kind", "");
  r.embedder_ref = j.value("embedder_ref", "");
  r.manifest_ref = j.value("manifest_ref", "");
  r.seed = j.value("seed", std::uint64_t{0});
  for (const auto& e : j.at("per_epoch")) r.per_epoch.push_back(eval::metrics_record_from_json(e));
  if (j.at("best_epoch").is_number_integer()) r.best_epoch = j["best_epoch"].get<int>();
  r.verdict = j.value("verdict", "NA") == "improved" ? eval::Verdict::kImproved : eval::Verdict::kNa;
  r.majority_fraction = j.value("majority_fraction", 0.0);
  r.status = j.value("status", "completed");
  r.embedder_digest_before = j.value("embedder_digest_before", "");
  r.embedder_digest_after = j.value("embedder_digest_after", "");
  return r;
}

inline std::string metrics_csv(const std::vector<eval::MetricsRecord>& rows) {
  std::string out = "epoch,loss,accuracy,precision,recall,f1,train_loss,train_accuracy\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.epoch, r.loss, r.accuracy, r.precision,
                  r.recall, r.f1, r.train_loss, r.train_accuracy);
    out += buf;
  }
  return out;
}

template <typename T>
struct TrainResult {
  TrainRun run;
  LstmClassifier<T> model;
};

namespace detail {

// Shuffled batches of similar length: shuffle, sort windows of eight
// batches by length, cut, then shuffle the batch order.
inline std::vector<std::vector<std::size_t>> length_buckets(const std::vector<Example>& data, std::size_t batch,
                                                            Rng& rng) {
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t window = batch * 8;
  for (std::size_t s = 0; s < order.size(); s += window) {
    auto e = std::min(order.size(), s + window);
    std::stable_sort(order.begin() + static_cast<long>(s), order.begin() + static_cast<long>(e),
                     [&](std::size_t a, std::size_t b) { return data[a].ids.size() < data[b].ids.size(); });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t s = 0; s < order.size(); s += batch) {
    batches.emplace_back(order.begin() + static_cast<long>(s),
                         order.begin() + static_cast<long>(std::min(order.size(), s + batch)));
  }
  rng.shuffle(batches);
  return batches;
}

}  // namespace detail

// Evaluation-mode probabilities for a list of embedded sequences.
template <typename T>
std::vector<T> predict_all(LstmClassifier<T>& model, const std::vector<Mat<T>>& xs, std::size_t batch) {
  std::vector<T> out;
  out.reserve(xs.size());
  for (std::size_t s = 0; s < xs.size(); s += batch) {
    std::vector<const Mat<T>*> ptrs;
    for (std::size_t k = s; k < std::min(xs.size(), s + batch); ++k) ptrs.push_back(&xs[k]);
    auto p = model.predict_batch(ptrs);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
std::vector<Mat<T>> embed_all(const EmbeddingSource<T>& emb, const std::vector<Example>& data) {
  std::vector<Mat<T>> out;
  out.reserve(data.size());
  for (const auto& e : data) {
    if (e.ids.empty()) throw Error(ErrorKind::kEmptySequence, "example has no tokens");
    out.push_back(emb.embed(e.ids));
  }
  return out;
}

// Scores probabilities against labels: mean BCE and the confusion matrix at
// `threshold` (vulnerable iff p >= threshold).
template <typename T>
std::pair<double, eval::ConfusionMatrix> score(const std::vector<T>& probs, const std::vector<Example>& data,
                                               double threshold) {
  eval::ConfusionMatrix cm;
  double loss = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = std::clamp(static_cast<double>(probs[i]), 1e-12, 1.0 - 1e-12);
    loss -= data[i].vulnerable ? std::log(p) : std::log(1.0 - p);
    cm.add(static_cast<double>(probs[i]) >= threshold, data[i].vulnerable);
  }
  return {data.empty() ? 0.0 : loss / static_cast<double>(data.size()), cm};
}

// Trains for cfg.epochs epochs and evaluates on `validation` after each.
// With freeze_embedder the embedder is only read; otherwise one optimizer
// updates embedder and classifier parameters together.
template <typename T>
TrainResult<T> train_classifier(const ClassifierConfig& cfg, EmbeddingSource<T>& emb,
                                const std::vector<Example>& train, const std::vector<Example>& validation,
                                std::uint64_t seed,
                                const std::function<void(const eval::MetricsRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorKind::kEmptySplit, "classifier training split is empty");
  if (validation.empty()) throw Error(ErrorKind::kEmptySplit, "classifier validation split is empty");
  std::size_t train_pos = 0;
  for (const auto& e : train) train_pos += e.vulnerable ? 1 : 0;
  if (train_pos == 0 || train_pos == train.size()) {
    throw Error(ErrorKind::kSingleClassDataset, "classifier training split has a single class");
  }
  std::size_t val_pos = 0;
  for (const auto& e : validation) val_pos += e.vulnerable ? 1 : 0;

  Rng rng(seed);
  TrainResult<T> result{TrainRun{}, LstmClassifier<T>(emb.dim(), cfg, rng.next_u64())};
  auto& run = result.run;
  auto& model = result.model;
  run.config = cfg;
  run.seed = seed;
  run.majority_fraction = eval::majority_fraction(val_pos, validation.size() - val_pos);
  run.embedder_digest_before = emb.digest();

  auto ps = model.params();
  if (!cfg.freeze_embedder) {
    for (auto* p : emb.params()) ps.push_back(p);
  }
  auto optimizer = nn::make_optimizer<T>(cfg.optimizer);

  std::vector<Mat<T>> train_x, val_x;
  if (cfg.freeze_embedder) {
    train_x = embed_all(emb, train);
    val_x = embed_all(emb, validation);
  }
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (const auto& idx : detail::length_buckets(train, batch, rng)) {
      nn::zero_grads(ps);
      std::vector<Mat<T>> owned;
      std::vector<const Mat<T>*> xs;
      std::vector<T> labels;
      if (!cfg.freeze_embedder) owned.reserve(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& ex = train[idx[k]];
        if (cfg.freeze_embedder) {
          xs.push_back(&train_x[idx[k]]);
        } else {
          owned.push_back(emb.forward_train(k, ex.ids, &rng));
          xs.push_back(&owned.back());
        }
        labels.push_back(ex.vulnerable ? T(1) : T(0));
      }
      std::vector<Mat<T>> d_inputs;
      const double loss =
          model.forward_backward(xs, labels, &rng, true, cfg.freeze_embedder ? nullptr : &d_inputs);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::kDivergedLoss, "classifier loss is not finite in epoch " + std::to_string(epoch));
      }
      if (!cfg.freeze_embedder) {
        for (std::size_t k = 0; k < idx.size(); ++k) emb.backward(k, d_inputs[k]);
      }
      optimizer->step(ps);
    }

    if (!cfg.freeze_embedder) {
      train_x = embed_all(emb, train);
      val_x = embed_all(emb, validation);
    }
    auto [val_loss, cm] = score(predict_all(model, val_x, batch), validation, cfg.decision_threshold);
    auto [train_loss, train_cm] = score(predict_all(model, train_x, batch), train, cfg.decision_threshold);
    if (!std::isfinite(val_loss) || !std::isfinite(train_loss)) {
      throw Error(ErrorKind::kDivergedLoss, "classifier loss is not finite after epoch " + std::to_string(epoch));
    }
    auto rec = eval::make_record(epoch, val_loss, cm);
    rec.train_loss = train_loss;
    rec.train_accuracy = eval::metrics(train_cm).accuracy;
    run.per_epoch.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  run.embedder_digest_after = emb.digest();
  run.verdict = eval::na_verdict(run.per_epoch, run.majority_fraction);
  if (run.verdict == eval::Verdict::kImproved) {
    run.best_epoch = run.per_epoch[eval::best_epoch_index(run.per_epoch)].epoch;
  }
  return result;
}

}  // namespace irvd::classify
