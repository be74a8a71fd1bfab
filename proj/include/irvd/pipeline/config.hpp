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

// Declarative pipeline configuration. Every section is optional in the file;
// missing fields take the defaults below. to_json() always writes the full,
// defaults-filled form, so two files that differ only by spelled-out
// defaults hash the same.

#pragma once

#include <nlohmann/json.hpp>

#include <set>
#include <string>
#include <vector>

#include "irvd/classify/lstm.hpp"
#include "irvd/common.hpp"
#include "irvd/corpus/build.hpp"
#include "irvd/embed/clm.hpp"
#include "irvd/embed/transformer.hpp"
#include "irvd/embed/word2vec.hpp"
#include "irvd/ir/normalize.hpp"
#include "irvd/synth/generator.hpp"
#include "irvd/tokenizer/bpe.hpp"

namespace irvd::pipeline {

struct SynthSection {
  bool enabled = false;
  synth::GeneratorSpec spec;
};

struct CorpusSection {
  std::string exclude_cwe = "CWE-121";
  std::size_t max_tokens = 2048;
  corpus::SplitFractions embedder_split{0.9, 0.1};
  corpus::SplitFractions classifier_split{0.8, 0.2};
  std::uint64_t seed = 0;
  bool stratify = false;
};

struct TokenizerSection {
  tokenizer::TrainOptions train{8192, 2};
  std::size_t max_len = 2048;  // framed sequence length fed to the embedder
};

struct EmbedderSection {
  embed::TransformerConfig model;  // vocab_size and max_positions follow the tokenizer
  embed::ClmTrainOptions train;
};

struct W2vSection {
  bool enabled = false;
  std::vector<embed::Word2vecConfig> models;
};

// One classifier run. `embedder` is "transformer", "w2v-cbow" or
// "w2v-skipgram".
struct GridEntry {
  std::string name;
  std::string embedder = "transformer";
  classify::ClassifierConfig config;
};

struct ClassifierSection {
  classify::ClassifierConfig defaults;
  std::vector<GridEntry> grid;
};

struct ReportSection {
  std::string external_csv;  // optional rows from outside sources
  std::string model_name = "GPT-2";
};

struct PipelineConfig {
  std::string work_dir = "work";
  std::string input_dir;  // empty with synth enabled: <work_dir>/synth
  SynthSection synth;
  ir::NormalizeOptions normalize;
  CorpusSection corpus;
  TokenizerSection tokenizer;
  EmbedderSection embedder;
  W2vSection baseline_w2v;
  ClassifierSection classifier;
  ReportSection report;

  std::string resolved_input_dir() const {
    if (!input_dir.empty()) return input_dir;
    if (synth.enabled) return work_dir + "/synth";
    return {};
  }

  // Model shape after the tokenizer-driven fields are filled in.
  embed::TransformerConfig transformer() const {
    auto c = embedder.model;
    c.vocab_size = static_cast<int>(tokenizer.train.vocab_size);
    c.max_positions = static_cast<int>(tokenizer.max_len);
    return c;
  }
};

// The grid run table of the original study: four SGD and three Adam
// settings, each evaluated with the embedder frozen and unfrozen.
inline std::vector<GridEntry> reference_grid(const classify::ClassifierConfig& defaults) {
  using Kind = nn::OptimizerSpec::Kind;
  struct Opt {
    Kind kind;
    double lr, mom;
  };
  const Opt opts[] = {{Kind::kSgdMomentum, 0.01, 0.01},   {Kind::kSgdMomentum, 1e-4, 0.01},
                      {Kind::kSgdMomentum, 1e-4, 0.001},  {Kind::kSgdMomentum, 1e-4, 0.0001},
                      {Kind::kAdam, 0.01, 0},             {Kind::kAdam, 0.001, 0},
                      {Kind::kAdam, 0.0001, 0}};
  std::vector<GridEntry> out;
  for (bool freeze : {false, true}) {
    for (const auto& o : opts) {
      GridEntry e;
      e.config = defaults;
      e.config.freeze_embedder = freeze;
      e.config.optimizer.kind = o.kind;
      e.config.optimizer.learning_rate = o.lr;
      e.config.optimizer.momentum = o.mom;
      e.name = e.config.optimizer.label() + (freeze ? " [frozen]" : " [unfrozen]");
      out.push_back(e);
    }
  }
  return out;
}

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::kConfigInvalid, where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw Error(ErrorKind::kConfigInvalid, (where.empty() ? k : where + "." + k) + ": unknown field");
  }
}

// Reads j[key] into `out` when present, naming the field on type errors.
template <typename V>
void read(const json& j, const std::string& where, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfigInvalid, where + "." + key + ": " + e.what());
  }
}

inline void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kConfigInvalid, field + ": " + msg);
}

// Runs `f`, prefixing any ConfigInvalid message with `field`.
template <typename F>
auto scoped(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfigInvalid, field + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfigInvalid, field + ": " + e.what());
  }
}

inline corpus::SplitFractions read_split(const json& j, const std::string& where, corpus::SplitFractions s) {
  check_keys(j, where, {"train", "validation"});
  read(j, where, "train", s.train);
  s.validation = 1.0 - s.train;
  read(j, where, "validation", s.validation);
  require(s.train > 0 && s.validation > 0 && std::abs(s.train + s.validation - 1.0) < 1e-9, where,
          "train and validation must be positive and sum to 1");
  return s;
}

inline json split_json(const corpus::SplitFractions& s) { return {{"train", s.train}, {"validation", s.validation}}; }

inline json optimizer_json(const nn::OptimizerSpec& o) {
  json j = nn::to_json(o);
  if (o.kind == nn::OptimizerSpec::Kind::kAdam) {
    j["beta1"] = o.beta1;
    j["beta2"] = o.beta2;
    j["epsilon"] = o.epsilon;
  }
  return j;
}

inline json classifier_json(const classify::ClassifierConfig& c) {
  json j = classify::to_json(c);
  j["optimizer"] = optimizer_json(c.optimizer);
  return j;
}

inline classify::ClassifierConfig read_classifier(const json& j, const std::string& where,
                                                  classify::ClassifierConfig base) {
  check_keys(j, where,
             {"lstm_layers", "hidden_units", "leaky_slope", "dropout", "epochs", "batch_size", "freeze_embedder",
              "optimizer", "decision_threshold"});
  if (j.contains("optimizer")) {
    check_keys(j["optimizer"], where + ".optimizer", {"kind", "learning_rate", "momentum", "beta1", "beta2", "epsilon"});
  }
  auto c = scoped(where, [&] { return classify::classifier_config_from_json(j, base); });
  scoped(where, [&] {
    c.validate();
    return 0;
  });
  return c;
}

inline embed::Word2vecConfig read_w2v(const json& j, const std::string& where) {
  check_keys(j, where, {"mode", "dim", "window", "negative_samples", "epochs", "learning_rate"});
  embed::Word2vecConfig c;
  std::string mode = "skipgram";
  read(j, where, "mode", mode);
  c.mode = scoped(where + ".mode", [&] { return embed::parse_w2v_mode(mode); });
  read(j, where, "dim", c.dim);
  read(j, where, "window", c.window);
  read(j, where, "negative_samples", c.negative_samples);
  read(j, where, "epochs", c.epochs);
  read(j, where, "learning_rate", c.learning_rate);
  scoped(where, [&] {
    c.validate();
    return 0;
  });
  return c;
}

}  // namespace detail

// Full, defaults-filled form.
inline nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  const auto& g = c.synth.spec;
  json grid = json::array();
  for (const auto& e : c.classifier.grid) {
    json r = detail::classifier_json(e.config);
    r["name"] = e.name;
    r["embedder"] = e.embedder;
    grid.push_back(r);
  }
  json w2v_models = json::array();
  for (const auto& m : c.baseline_w2v.models) w2v_models.push_back(embed::to_json(m));
  const auto& t = c.embedder.train;
  json model = embed::to_json(c.embedder.model);
  model.erase("vocab_size");
  model.erase("max_positions");
  return {
      {"work_dir", c.work_dir},
      {"input_dir", c.input_dir},
      {"synth",
       {{"enabled", c.synth.enabled},
        {"n_functions", g.n_functions},
        {"vulnerable_fraction", g.vulnerable_fraction},
        {"seed", g.seed},
        {"min_buffer", g.min_buffer},
        {"max_buffer", g.max_buffer},
        {"difficulty", g.difficulty},
        {"style", synth::to_string(g.style)},
        {"n_background", g.n_background}}},
      {"normalize", {{"stdlib_allowlist", c.normalize.stdlib_allowlist}}},
      {"corpus",
       {{"exclude_cwe", c.corpus.exclude_cwe},
        {"max_tokens", c.corpus.max_tokens},
        {"embedder_split", detail::split_json(c.corpus.embedder_split)},
        {"classifier_split", detail::split_json(c.corpus.classifier_split)},
        {"seed", c.corpus.seed},
        {"stratify", c.corpus.stratify}}},
      {"tokenizer",
       {{"vocab_size", c.tokenizer.train.vocab_size},
        {"min_frequency", c.tokenizer.train.min_frequency},
        {"max_len", c.tokenizer.max_len}}},
      {"embedder",
       {{"model", model},
        {"train",
         {{"epochs", t.epochs},
          {"eval_every", t.eval_every},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"min_lr_fraction", t.min_lr_fraction},
          {"warmup_steps", t.warmup_steps},
          {"grad_clip", t.grad_clip},
          {"max_steps", t.max_steps},
          {"seed", t.seed}}}}},
      {"baseline_w2v", {{"enabled", c.baseline_w2v.enabled}, {"models", w2v_models}}},
      {"classifier", {{"defaults", detail::classifier_json(c.classifier.defaults)}, {"grid", grid}}},
      {"report", {{"external_csv", c.report.external_csv}, {"model_name", c.report.model_name}}},
  };
}

// Throws ConfigInvalid naming the offending field.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  using detail::require;
  PipelineConfig c;
  detail::check_keys(j, "", {"work_dir", "input_dir", "synth", "normalize", "corpus", "tokenizer", "embedder",
                             "baseline_w2v", "classifier", "report"});
  read(j, "", "work_dir", c.work_dir);
  read(j, "", "input_dir", c.input_dir);
  require(!c.work_dir.empty(), "work_dir", "must not be empty");

  if (j.contains("synth")) {
    const auto& s = j["synth"];
    detail::check_keys(s, "synth", {"enabled", "n_functions", "vulnerable_fraction", "seed", "min_buffer",
                                    "max_buffer", "difficulty", "style", "n_background"});
    auto& g = c.synth.spec;
    read(s, "synth", "enabled", c.synth.enabled);
    read(s, "synth", "n_functions", g.n_functions);
    read(s, "synth", "vulnerable_fraction", g.vulnerable_fraction);
    read(s, "synth", "seed", g.seed);
    read(s, "synth", "min_buffer", g.min_buffer);
    read(s, "synth", "max_buffer", g.max_buffer);
    read(s, "synth", "difficulty", g.difficulty);
    read(s, "synth", "n_background", g.n_background);
    std::string style = synth::to_string(g.style);
    read(s, "synth", "style", style);
    g.style = detail::scoped("synth.style", [&] { return synth::parse_style(style); });
    detail::scoped("synth", [&] {
      g.validate();
      return 0;
    });
  }
  if (j.contains("normalize")) {
    detail::check_keys(j["normalize"], "normalize", {"stdlib_allowlist"});
    read(j["normalize"], "normalize", "stdlib_allowlist", c.normalize.stdlib_allowlist);
  }
  if (j.contains("corpus")) {
    const auto& s = j["corpus"];
    detail::check_keys(s, "corpus",
                       {"exclude_cwe", "max_tokens", "embedder_split", "classifier_split", "seed", "stratify"});
    read(s, "corpus", "exclude_cwe", c.corpus.exclude_cwe);
    read(s, "corpus", "max_tokens", c.corpus.max_tokens);
    read(s, "corpus", "seed", c.corpus.seed);
    read(s, "corpus", "stratify", c.corpus.stratify);
    if (s.contains("embedder_split")) {
      c.corpus.embedder_split = detail::read_split(s["embedder_split"], "corpus.embedder_split", c.corpus.embedder_split);
    }
    if (s.contains("classifier_split")) {
      c.corpus.classifier_split =
          detail::read_split(s["classifier_split"], "corpus.classifier_split", c.corpus.classifier_split);
    }
    require(c.corpus.max_tokens >= 1, "corpus.max_tokens", "must be >= 1");
  }
  if (j.contains("tokenizer")) {
    const auto& s = j["tokenizer"];
    detail::check_keys(s, "tokenizer", {"vocab_size", "min_frequency", "max_len"});
    read(s, "tokenizer", "vocab_size", c.tokenizer.train.vocab_size);
    read(s, "tokenizer", "min_frequency", c.tokenizer.train.min_frequency);
    read(s, "tokenizer", "max_len", c.tokenizer.max_len);
  }
  require(c.tokenizer.train.vocab_size >= static_cast<std::size_t>(tokenizer::kBaseVocab), "tokenizer.vocab_size",
          "must be >= " + std::to_string(tokenizer::kBaseVocab));
  require(c.tokenizer.max_len >= 3, "tokenizer.max_len", "must be >= 3");
  if (j.contains("embedder")) {
    const auto& s = j["embedder"];
    detail::check_keys(s, "embedder", {"model", "train"});
    if (s.contains("model")) {
      detail::check_keys(s["model"], "embedder.model",
                         {"n_layers", "d_model", "n_heads", "d_ff", "dropout", "embed_layer"});
      auto m = s["model"];
      if (!m.contains("d_ff")) m["d_ff"] = 4 * m.value("d_model", c.embedder.model.d_model);
      c.embedder.model = detail::scoped("embedder.model",
                                        [&] { return embed::transformer_config_from_json(m, c.embedder.model); });
    }
    if (s.contains("train")) {
      const auto& t = s["train"];
      detail::check_keys(t, "embedder.train",
                         {"epochs", "eval_every", "batch_size", "learning_rate", "min_lr_fraction", "warmup_steps",
                          "grad_clip", "max_steps", "seed"});
      auto& o = c.embedder.train;
      read(t, "embedder.train", "epochs", o.epochs);
      read(t, "embedder.train", "eval_every", o.eval_every);
      read(t, "embedder.train", "batch_size", o.batch_size);
      read(t, "embedder.train", "learning_rate", o.learning_rate);
      read(t, "embedder.train", "min_lr_fraction", o.min_lr_fraction);
      read(t, "embedder.train", "warmup_steps", o.warmup_steps);
      read(t, "embedder.train", "grad_clip", o.grad_clip);
      read(t, "embedder.train", "max_steps", o.max_steps);
      read(t, "embedder.train", "seed", o.seed);
      require(o.epochs >= 1, "embedder.train.epochs", "must be >= 1");
      require(o.batch_size >= 1, "embedder.train.batch_size", "must be >= 1");
      require(o.eval_every >= 1, "embedder.train.eval_every", "must be >= 1");
      require(o.learning_rate > 0, "embedder.train.learning_rate", "must be > 0");
    }
  }
  detail::scoped("embedder.model", [&] {
    c.transformer().validate();
    return 0;
  });
  if (j.contains("baseline_w2v")) {
    const auto& s = j["baseline_w2v"];
    detail::check_keys(s, "baseline_w2v", {"enabled", "models"});
    read(s, "baseline_w2v", "enabled", c.baseline_w2v.enabled);
    if (s.contains("models")) {
      require(s["models"].is_array(), "baseline_w2v.models", "expected an array");
      for (std::size_t i = 0; i < s["models"].size(); ++i) {
        c.baseline_w2v.models.push_back(
            detail::read_w2v(s["models"][i], "baseline_w2v.models[" + std::to_string(i) + "]"));
      }
    }
    std::set<std::string> modes;
    for (const auto& m : c.baseline_w2v.models) {
      require(modes.insert(embed::to_string(m.mode)).second, "baseline_w2v.models", "each mode may appear once");
    }
  }
  if (j.contains("classifier")) {
    const auto& s = j["classifier"];
    detail::check_keys(s, "classifier", {"defaults", "grid"});
    if (s.contains("defaults")) {
      c.classifier.defaults = detail::read_classifier(s["defaults"], "classifier.defaults", c.classifier.defaults);
    }
    if (s.contains("grid")) {
      if (s["grid"].is_string() && s["grid"] == "reference") {
        c.classifier.grid = reference_grid(c.classifier.defaults);
      } else {
        require(s["grid"].is_array(), "classifier.grid", "expected an array or \"reference\"");
        for (std::size_t i = 0; i < s["grid"].size(); ++i) {
          const std::string where = "classifier.grid[" + std::to_string(i) + "]";
          auto r = s["grid"][i];
          require(r.is_object(), where, "expected an object");
          GridEntry e;
          read(r, where, "name", e.name);
          read(r, where, "embedder", e.embedder);
          r.erase("name");
          r.erase("embedder");
          e.config = detail::read_classifier(r, where, c.classifier.defaults);
          if (e.name.empty()) {
            e.name = e.config.optimizer.label() + (e.config.freeze_embedder ? " [frozen]" : " [unfrozen]");
          }
          c.classifier.grid.push_back(e);
        }
      }
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < c.classifier.grid.size(); ++i) {
      const auto& e = c.classifier.grid[i];
      const std::string where = "classifier.grid[" + std::to_string(i) + "]";
      require(names.insert(e.name).second, where + ".name", "duplicate run name '" + e.name + "'");
      require(e.embedder == "transformer" || e.embedder == "w2v-cbow" || e.embedder == "w2v-skipgram",
              where + ".embedder", "must be transformer, w2v-cbow or w2v-skipgram");
      if (e.embedder != "transformer") {
        const std::string mode = e.embedder.substr(4);
        bool found = false;
        for (const auto& m : c.baseline_w2v.models) found |= embed::to_string(m.mode) == mode;
        require(c.baseline_w2v.enabled && found, where + ".embedder",
                "needs baseline_w2v enabled with a '" + mode + "' model");
      }
    }
  }
  if (j.contains("report")) {
    detail::check_keys(j["report"], "report", {"external_csv", "model_name"});
    read(j["report"], "report", "external_csv", c.report.external_csv);
    read(j["report"], "report", "model_name", c.report.model_name);
  }
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigInvalid, path + ": " + e.what());
  }
  return config_from_json(j);
}

inline std::string canonical_dump(const nlohmann::json& j) { return j.dump(); }

// Digest of every semantic field. Paths (work_dir, input_dir) only say
// where things live; input identity is tracked through file hashes.
inline std::string config_hash(const PipelineConfig& c) {
  auto j = to_json(c);
  j.erase("work_dir");
  j.erase("input_dir");
  return sha256_hex(canonical_dump(j));
}

// Digest of everything except the grid itself, so appending a run leaves
// the seeds of the existing runs unchanged.
inline std::uint64_t grid_seed(const PipelineConfig& c, std::size_t run_index) {
  auto j = to_json(c);
  j.erase("work_dir");
  j.erase("input_dir");
  j["classifier"].erase("grid");
  return seed_from(sha256_hex(canonical_dump(j)) + ":" + std::to_string(run_index));
}

}  // namespace irvd::pipeline
