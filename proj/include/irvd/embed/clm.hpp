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

// Causal language-model training and embedder checkpoints.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/embed/transformer.hpp"
#include "irvd/nn/container.hpp"
#include "irvd/nn/optim.hpp"
#include "irvd/random.hpp"

namespace irvd::embed {

struct ClmTrainOptions {
  int epochs = 20;
  int eval_every = 1000;
  int batch_size = 16;
  double learning_rate = 5e-4;
  double min_lr_fraction = 0.1;  // cosine decays to lr * min_lr_fraction
  int warmup_steps = 100;
  double grad_clip = 1.0;
  long max_steps = 0;  // 0: epochs alone bound the run
  std::uint64_t seed = 0;
};

struct ClmLogRow {
  long step = 0;
  double train_loss = 0;       // loss of the batch at this step
  double train_loss_ma = 0;    // moving average over the last 100 steps
  double val_loss = 0;
};

template <typename T>
struct EmbedderCheckpoint {
  Transformer<T> model;
  long trained_steps = 0;
  double val_loss = 0;
  std::string corpus_manifest_ref;
};

template <typename T>
struct ClmResult {
  EmbedderCheckpoint<T> best;
  std::vector<ClmLogRow> log;
  long total_steps = 0;
};

// Mean next-token loss over a set of sequences, evaluation mode.
template <typename T>
double clm_eval_loss(Transformer<T>& model, const std::vector<std::vector<TokenId>>& seqs) {
  double sum = 0;
  std::size_t count = 0;
  for (const auto& s : seqs) {
    auto r = model.clm_loss(s);
    sum += r.loss_sum;
    count += r.count;
  }
  if (count == 0) throw Error(ErrorKind::kEmptySplit, "no predictable tokens in evaluation split");
  return sum / static_cast<double>(count);
}

// Trains with Adam on next-token cross-entropy. The loss of each step is the
// mean over every predicted token in the batch. Validation loss is measured
// every `eval_every` steps and after the final step; the returned checkpoint
// holds the weights with the lowest validation loss.
template <typename T>
ClmResult<T> train_clm(const TransformerConfig& config, const std::vector<std::vector<TokenId>>& train,
                       const std::vector<std::vector<TokenId>>& validation, const ClmTrainOptions& opts,
                       const std::function<void(const ClmLogRow&)>& on_eval = {}) {
  if (train.empty()) throw Error(ErrorKind::kEmptySplit, "CLM training split is empty");
  if (validation.empty()) throw Error(ErrorKind::kEmptySplit, "CLM validation split is empty");
  for (const auto* split : {&train, &validation}) {
    for (const auto& s : *split) {
      if (static_cast<int>(s.size()) > config.max_positions) {
        throw Error(ErrorKind::kSequenceTooLong, "sequence longer than max_positions");
      }
    }
  }
  Rng rng(opts.seed);
  Transformer<T> model(config, rng.next_u64());
  auto params = model.params();
  nn::Adam<T> adam(opts.learning_rate, 0.9, 0.999, 1e-8);

  const auto batch = static_cast<std::size_t>(std::max(1, opts.batch_size));
  const long steps_per_epoch = static_cast<long>((train.size() + batch - 1) / batch);
  long total = steps_per_epoch * opts.epochs;
  if (opts.max_steps > 0) total = std::min(total, opts.max_steps);

  ClmResult<T> result;
  result.best.val_loss = std::numeric_limits<double>::infinity();
  std::deque<double> recent;
  double recent_sum = 0;
  std::vector<std::size_t> order(train.size());
  long step = 0;

  auto evaluate = [&](double batch_loss) {
    ClmLogRow row{step, batch_loss, recent_sum / static_cast<double>(recent.size()), clm_eval_loss(model, validation)};
    result.log.push_back(row);
    if (on_eval) on_eval(row);
    if (row.val_loss < result.best.val_loss) {
      result.best.model = model;
      result.best.val_loss = row.val_loss;
      result.best.trained_steps = step;
    }
  };

  for (int epoch = 0; epoch < opts.epochs && step < total; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size() && step < total; start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::size_t tokens = 0;
      for (std::size_t k = start; k < end; ++k) tokens += train[order[k]].size() > 1 ? train[order[k]].size() - 1 : 0;
      if (tokens == 0) continue;
      nn::zero_grads(params);
      double loss_sum = 0;
      for (std::size_t k = start; k < end; ++k) {
        loss_sum += model.clm_loss(train[order[k]], 1.0 / static_cast<double>(tokens), &rng).loss_sum;
      }
      const double loss = loss_sum / static_cast<double>(tokens);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::kDivergedLoss, "CLM loss is not finite at step " + std::to_string(step + 1));
      }
      nn::clip_grad_norm(params, opts.grad_clip);
      const double progress = static_cast<double>(step) / static_cast<double>(std::max<long>(1, total));
      const double floor_lr = opts.learning_rate * opts.min_lr_fraction;
      double lr = floor_lr + 0.5 * (opts.learning_rate - floor_lr) * (1.0 + std::cos(std::numbers::pi * progress));
      if (step < opts.warmup_steps) lr *= static_cast<double>(step + 1) / static_cast<double>(opts.warmup_steps);
      adam.set_learning_rate(lr);
      adam.step(params);
      ++step;

      recent.push_back(loss);
      recent_sum += loss;
      if (recent.size() > 100) {
        recent_sum -= recent.front();
        recent.pop_front();
      }
      if (opts.eval_every > 0 && step % opts.eval_every == 0) evaluate(loss);
      if (step == total && (opts.eval_every <= 0 || step % opts.eval_every != 0)) evaluate(loss);
    }
  }
  result.total_steps = step;
  return result;
}

inline std::string clm_log_csv(const std::vector<ClmLogRow>& log) {
  std::string out = "step,train_loss,train_loss_ma100,val_loss\n";
  char buf[128];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%ld,%.6f,%.6f,%.6f\n", r.step, r.train_loss, r.train_loss_ma, r.val_loss);
    out += buf;
  }
  return out;
}

template <typename T>
std::string checkpoint_digest(const Transformer<T>& model) {
  return nn::weights_digest(model.params());
}

// Writes config.json and weights.bin into `dir`.
template <typename T>
void save_checkpoint(const std::string& dir, const EmbedderCheckpoint<T>& ckpt) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"kind", "transformer"},
                      {"config", to_json(ckpt.model.config())},
                      {"trained_steps", ckpt.trained_steps},
                      {"val_loss", ckpt.val_loss},
                      {"corpus_manifest_ref", ckpt.corpus_manifest_ref},
                      {"weights_digest", checkpoint_digest(ckpt.model)}};
  write_file(dir + "/config.json", j.dump(2) + "\n");
  write_file(dir + "/weights.bin", nn::encode_container(nn::snapshot(ckpt.model.params())));
}

template <typename T>
EmbedderCheckpoint<T> load_checkpoint(const std::string& dir) {
  if (!std::filesystem::exists(dir + "/config.json") || !std::filesystem::exists(dir + "/weights.bin")) {
    throw Error(ErrorKind::kMissingArtifact, "embedder checkpoint in " + dir);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir + "/config.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, dir + "/config.json: " + e.what());
  }
  if (j.value("kind", "") != "transformer") throw Error(ErrorKind::kFormat, dir + " is not a transformer checkpoint");
  EmbedderCheckpoint<T> ckpt;
  ckpt.model = Transformer<T>::shaped(transformer_config_from_json(j.at("config")));
  nn::restore(ckpt.model.params(), nn::decode_container<T>(read_file(dir + "/weights.bin")));
  ckpt.trained_steps = j.value("trained_steps", 0L);
  ckpt.val_loss = j.value("val_loss", 0.0);
  ckpt.corpus_manifest_ref = j.value("corpus_manifest_ref", "");
  return ckpt;
}

}  // namespace irvd::embed
