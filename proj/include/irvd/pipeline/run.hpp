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

// Stage runner. Every stage reads files under the work directory, writes
// its own subdirectory and a provenance record in provenance/<stage>.json
// holding the hashes of all inputs and outputs. A stage whose key (stage
// config slice plus input hashes) matches its last provenance record, and
// whose outputs are still intact, is skipped.
//
// Layout under work_dir:
//   synth/                       generated corpus (when synth is enabled)
//   extract/functions.jsonl      raw function bodies
//   normalize/functions.jsonl    canonical functions, one per define
//   tokenizer/                   vocab.json, merges.txt
//   corpus/                      embedder_manifest.json, classifier_manifest.json
//   embedder/                    checkpoint/, clm_log.csv
//   baseline_w2v/<mode>/         word2vec tables
//   grid/<NN>/                   run.json, metrics.csv; grid/runs.json
//   evaluate/evaluation.json
//   report/                      *.md, *.csv
//   logs/events.jsonl

#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "irvd/classify/train.hpp"
#include "irvd/common.hpp"
#include "irvd/corpus/build.hpp"
#include "irvd/corpus/manifest.hpp"
#include "irvd/embed/clm.hpp"
#include "irvd/embed/word2vec.hpp"
#include "irvd/eval/metrics.hpp"
#include "irvd/eval/report.hpp"
#include "irvd/ir/extract.hpp"
#include "irvd/ir/normalize.hpp"
#include "irvd/ir/records.hpp"
#include "irvd/pipeline/config.hpp"
#include "irvd/synth/generator.hpp"
#include "irvd/tokenizer/bpe.hpp"

namespace irvd::pipeline {

enum class Stage {
  kSynth,
  kExtract,
  kNormalize,
  kTokenizer,
  kCorpus,
  kEmbedder,
  kBaselineW2v,
  kClassifierGrid,
  kEvaluate,
  kReport,
  kAll,
};

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::kSynth: return "synth";
    case Stage::kExtract: return "extract";
    case Stage::kNormalize: return "normalize";
    case Stage::kTokenizer: return "tokenizer";
    case Stage::kCorpus: return "corpus";
    case Stage::kEmbedder: return "embedder";
    case Stage::kBaselineW2v: return "baseline-w2v";
    case Stage::kClassifierGrid: return "classifier-grid";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kReport: return "report";
    case Stage::kAll: return "all";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Stage::kAll); ++i) {
    if (s == to_string(static_cast<Stage>(i))) return static_cast<Stage>(i);
  }
  throw Error(ErrorKind::kConfigInvalid, "unknown stage '" + s + "'");
}

// Report file stems, in the order report.md lists them.
inline const std::vector<std::string>& report_tables() {
  static const std::vector<std::string> t = {"corpus_counts", "embedder_validation", "grid_unfrozen", "grid_frozen",
                                             "comparison"};
  return t;
}

struct StageOutcome {
  Stage stage;
  bool cache_hit = false;
};

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

// Regular files under `dir`, sorted, as paths relative to `base`.
inline std::vector<std::string> files_under(const std::string& dir, const std::string& base) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), base).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string slug(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", index);
  return buf;
}

}  // namespace detail

class Pipeline {
 public:
  using Json = nlohmann::json;
  using T = float;

  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), hash_(config_hash(cfg_)) {}

  const PipelineConfig& config() const { return cfg_; }
  const std::string& hash() const { return hash_; }
  std::string path(const std::string& rel) const { return cfg_.work_dir + "/" + rel; }

  // Called for every logged event, after it is appended to events.jsonl.
  std::function<void(const Json&)> on_event;

  // Stages in execution order for `all`: build the corpus and the embedder,
  // then classify, evaluate and report.
  std::vector<Stage> expand(Stage s) const {
    if (s != Stage::kAll) return {s};
    std::vector<Stage> out;
    if (cfg_.synth.enabled) out.push_back(Stage::kSynth);
    for (Stage x : {Stage::kExtract, Stage::kNormalize, Stage::kTokenizer, Stage::kCorpus, Stage::kEmbedder}) {
      out.push_back(x);
    }
    if (cfg_.baseline_w2v.enabled) out.push_back(Stage::kBaselineW2v);
    for (Stage x : {Stage::kClassifierGrid, Stage::kEvaluate, Stage::kReport}) out.push_back(x);
    return out;
  }

  std::vector<StageOutcome> run(Stage s) {
    std::vector<StageOutcome> out;
    for (Stage x : expand(s)) out.push_back(run_one(x));
    return out;
  }

  void log(const std::string& event, Json fields = Json::object()) {
    fields["ts"] = detail::utc_now();
    fields["event"] = event;
    std::filesystem::create_directories(path("logs"));
    std::ofstream f(path("logs/events.jsonl"), std::ios::app);
    f << fields.dump() << "\n";
    if (on_event) on_event(fields);
  }

 private:
  struct Plan {
    Json key_config;
    std::vector<std::string> inputs;  // absolute-or-cwd paths
    std::string output_dir;           // replaced wholesale on every run
    std::function<void()> body;
  };

  StageOutcome run_one(Stage s) {
    Plan plan = plan_for(s);
    const std::string name = to_string(s);
    Json inputs = Json::array();
    for (const auto& p : plan.inputs) {
      if (!std::filesystem::is_regular_file(p)) {
        throw Error(ErrorKind::kMissingArtifact, "stage " + name + " needs " + p);
      }
      inputs.push_back({{"path", p}, {"sha256", file_sha256(p)}});
    }
    const std::string key = sha256_hex(Json{{"stage", name}, {"config", plan.key_config}, {"inputs", inputs}}.dump());
    const std::string prov_path = path("provenance/" + name + ".json");

    if (std::filesystem::exists(prov_path)) {
      try {
        Json prev = Json::parse(read_file(prov_path));
        bool intact = prev.value("stage_key", "") == key;
        for (const auto& o : prev.value("outputs", Json::array())) {
          if (!intact) break;
          const std::string p = o.at("path").get<std::string>();
          intact = std::filesystem::is_regular_file(p) && file_sha256(p) == o.at("sha256").get<std::string>();
        }
        if (intact) {
          log("cache_hit", {{"stage", name}, {"stage_key", key}});
          return {s, true};
        }
      } catch (const Json::exception&) {
        // Unreadable provenance: rerun the stage.
      }
    }

    log("stage_start", {{"stage", name}, {"stage_key", key}});
    const std::string started = detail::utc_now();
    const std::string& out_dir = plan.output_dir;
    std::filesystem::remove_all(out_dir);
    std::filesystem::create_directories(out_dir);
    plan.body();

    Json outputs = Json::array();
    for (const auto& rel : detail::files_under(out_dir, out_dir)) {
      const std::string p = out_dir + "/" + rel;
      outputs.push_back({{"path", p}, {"sha256", file_sha256(p)}});
    }
    Json prov = {{"stage", name},        {"stage_key", key},          {"config_hash", hash_},
                 {"inputs", inputs},     {"outputs", outputs},        {"started_at", started},
                 {"finished_at", detail::utc_now()}};
    std::filesystem::create_directories(path("provenance"));
    write_file(prov_path, prov.dump(2) + "\n");
    log("stage_end", {{"stage", name}, {"outputs", outputs.size()}});
    return {s, false};
  }

  std::string input_dir() const {
    auto d = cfg_.resolved_input_dir();
    if (d.empty()) throw Error(ErrorKind::kConfigInvalid, "input_dir: required unless synth is enabled");
    return d;
  }

  std::vector<std::string> tokenizer_files() const { return {path("tokenizer/vocab.json"), path("tokenizer/merges.txt")}; }

  Plan plan_for(Stage s) {
    const Json full = to_json(cfg_);
    switch (s) {
      case Stage::kSynth: {
        if (!cfg_.synth.enabled) throw Error(ErrorKind::kConfigInvalid, "synth.enabled: synth stage requested but disabled");
        // Writes straight into the input directory (work_dir/synth unless
        // input_dir says otherwise), replacing its contents.
        return {full["synth"], {}, input_dir(), [this] { synth::write_corpus(input_dir(), synth::generate(cfg_.synth.spec)); }};
      }
      case Stage::kExtract: {
        const std::string dir = input_dir();
        if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::kMissingArtifact, "stage extract needs " + dir);
        std::vector<std::string> inputs;
        for (const auto& rel : detail::files_under(dir, dir)) {
          if (rel.size() > 3 && rel.substr(rel.size() - 3) == ".ll") inputs.push_back(dir + "/" + rel);
        }
        if (inputs.empty()) throw Error(ErrorKind::kMissingArtifact, "stage extract found no .ll files in " + dir);
        return {Json::object(), inputs, path("extract"), [this, dir] { stage_extract(dir); }};
      }
      case Stage::kNormalize:
        return {full["normalize"], {path("extract/functions.jsonl")}, path("normalize"), [this] { stage_normalize(); }};
      case Stage::kTokenizer:
        return {Json{{"tokenizer", full["tokenizer"]}, {"exclude_cwe", cfg_.corpus.exclude_cwe}},
                {path("normalize/functions.jsonl")}, path("tokenizer"), [this] { stage_tokenizer(); }};
      case Stage::kCorpus: {
        auto in = tokenizer_files();
        in.push_back(path("normalize/functions.jsonl"));
        return {full["corpus"], in, path("corpus"), [this] { stage_corpus(); }};
      }
      case Stage::kEmbedder: {
        auto in = tokenizer_files();
        in.push_back(path("normalize/functions.jsonl"));
        in.push_back(path("corpus/embedder_manifest.json"));
        return {Json{{"embedder", full["embedder"]}, {"max_len", cfg_.tokenizer.max_len}}, in, path("embedder"),
                [this] { stage_embedder(); }};
      }
      case Stage::kBaselineW2v: {
        auto in = tokenizer_files();
        in.push_back(path("normalize/functions.jsonl"));
        in.push_back(path("corpus/embedder_manifest.json"));
        return {Json{{"w2v", full["baseline_w2v"]}, {"seed", cfg_.embedder.train.seed}}, in, path("baseline_w2v"),
                [this] { stage_w2v(); }};
      }
      case Stage::kClassifierGrid: {
        auto in = tokenizer_files();
        in.push_back(path("normalize/functions.jsonl"));
        in.push_back(path("corpus/classifier_manifest.json"));
        Json seeds = Json::array();
        std::set<std::string> kinds;
        for (std::size_t i = 0; i < cfg_.classifier.grid.size(); ++i) {
          seeds.push_back(grid_seed(cfg_, i));
          kinds.insert(cfg_.classifier.grid[i].embedder);
        }
        if (kinds.count("transformer")) {
          in.push_back(path("embedder/checkpoint/config.json"));
          in.push_back(path("embedder/checkpoint/weights.bin"));
        }
        for (const char* mode : {"cbow", "skipgram"}) {
          if (kinds.count(std::string("w2v-") + mode)) in.push_back(path(std::string("baseline_w2v/") + mode + "/weights.bin"));
        }
        return {Json{{"classifier", full["classifier"]}, {"seeds", seeds}, {"max_len", cfg_.tokenizer.max_len}}, in,
                path("grid"), [this] { stage_grid(); }};
      }
      case Stage::kEvaluate: {
        // Every run file, not just the index, so a changed run invalidates.
        std::vector<std::string> in = {path("grid/runs.json"), path("corpus/classifier_manifest.json")};
        for (const auto& rel : detail::files_under(path("grid"), path("grid"))) {
          if (rel != "runs.json") in.push_back(path("grid/" + rel));
        }
        return {Json::object(), in, path("evaluate"), [this] { stage_evaluate(); }};
      }
      case Stage::kReport: {
        std::vector<std::string> in = {path("evaluate/evaluation.json"), path("corpus/embedder_manifest.json"),
                                       path("corpus/classifier_manifest.json"), path("embedder/clm_log.csv")};
        if (!cfg_.report.external_csv.empty()) in.push_back(cfg_.report.external_csv);
        return {Json{{"report", full["report"]}, {"max_tokens", cfg_.corpus.max_tokens}}, in, path("report"),
                [this] { stage_report(); }};
      }
      case Stage::kAll:
        break;
    }
    throw Error(ErrorKind::kConfigInvalid, "stage 'all' has no single plan");
  }

  // --- stages -------------------------------------------------------------

  void stage_extract(const std::string& dir) {
    std::vector<ir::FunctionRecord> recs;
    std::size_t modules = 0;
    for (const auto& m : ir::load_modules(dir)) {
      ++modules;
      for (const auto& f : ir::extract_functions(m)) {
        recs.push_back({sha256_hex(f.raw_body), f.original_name, f.raw_body, f.source_path, f.source_index});
      }
    }
    if (recs.empty()) throw Error(ErrorKind::kEmptyCorpus, "no function definitions under " + dir);
    ir::write_jsonl(path("extract/functions.jsonl"), recs);
    log("extracted", {{"modules", modules}, {"functions", recs.size()}});
  }

  void stage_normalize() {
    std::vector<ir::FunctionRecord> out;
    for (const auto& r : ir::read_jsonl(path("extract/functions.jsonl"))) {
      ir::LiftedFunction f;
      f.original_name = r.name;
      f.raw_body = r.text;
      f.source_path = r.source;
      f.source_index = r.ordinal;
      out.push_back(ir::to_record(ir::normalize(f, 1, cfg_.normalize)));
    }
    ir::write_jsonl(path("normalize/functions.jsonl"), out);
    log("normalized", {{"functions", out.size()}});
  }

  std::vector<ir::NormalizedFunction> normalized() const {
    std::vector<ir::NormalizedFunction> out;
    for (const auto& r : ir::read_jsonl(path("normalize/functions.jsonl"))) out.push_back(ir::from_record(r));
    return out;
  }

  bool excluded(const ir::NormalizedFunction& f) const {
    auto tag = ir::cwe_tag(f.original_name, f.source_path);
    return tag && *tag == cfg_.corpus.exclude_cwe;
  }

  // Trained on the deduplicated embedding population, so no text from the
  // labeled classifier set shapes the vocabulary.
  void stage_tokenizer() {
    std::vector<std::string> texts;
    std::set<std::string> seen;
    for (const auto& f : normalized()) {
      if (!excluded(f) && seen.insert(f.content_hash).second) texts.push_back(f.canonical_text);
    }
    auto tok = tokenizer::TokenizerModel::train(texts, cfg_.tokenizer.train);
    tok.save(path("tokenizer"));
    log("tokenizer_trained", {{"documents", texts.size()}, {"vocab_size", tok.vocab_size()}});
  }

  tokenizer::TokenizerModel load_tokenizer() const {
    auto tok = tokenizer::TokenizerModel::load(path("tokenizer"));
    tok.set_max_len(cfg_.tokenizer.max_len);
    return tok;
  }

  void stage_corpus() {
    auto fs = normalized();
    auto tok = load_tokenizer();
    const auto& c = cfg_.corpus;
    auto emb = corpus::build_embedder_corpus(fs, c.exclude_cwe, c.embedder_split, c.seed);
    std::vector<corpus::LabeledFunction> labeled;
    for (const auto& f : fs) {
      if (!excluded(f)) continue;
      corpus::LabeledFunction lf;
      lf.label = corpus::label_from_name(f.original_name);
      if (lf.label == corpus::Label::kUnlabeled) continue;
      lf.cwe = c.exclude_cwe;
      lf.token_length = tok.encode(f.canonical_text).size();
      lf.function = f;
      labeled.push_back(std::move(lf));
    }
    auto cls = corpus::build_classifier_dataset(labeled, c.max_tokens, c.classifier_split, c.seed, c.stratify);
    corpus::save_manifest(path("corpus/embedder_manifest.json"), emb);
    corpus::save_manifest(path("corpus/classifier_manifest.json"), cls);
    log("corpus_built", {{"embedder_members", emb.members.size()}, {"classifier_members", cls.members.size()},
                         {"classifier_counts", cls.counts}});
  }

  // Framed token ids for each manifest member in `split`, with labels.
  std::vector<classify::Example> examples(const corpus::CorpusManifest& m, corpus::Split split,
                                          const tokenizer::TokenizerModel& tok) const {
    std::map<std::string, const ir::NormalizedFunction*> by_hash;
    auto fs = normalized();
    for (const auto& f : fs) by_hash.emplace(f.content_hash, &f);
    std::vector<classify::Example> out;
    for (const auto& mem : m.members) {
      if (mem.split != split) continue;
      auto it = by_hash.find(mem.hash);
      if (it == by_hash.end()) throw Error(ErrorKind::kMissingArtifact, "function " + mem.hash + " in manifest");
      out.push_back({tok.encode_framed(it->second->canonical_text), mem.label == corpus::Label::kVulnerable});
    }
    return out;
  }

  static std::vector<std::vector<tokenizer::TokenId>> ids_of(const std::vector<classify::Example>& xs) {
    std::vector<std::vector<tokenizer::TokenId>> out;
    for (const auto& x : xs) out.push_back(x.ids);
    return out;
  }

  void stage_embedder() {
    auto tok = load_tokenizer();
    auto m = corpus::load_manifest(path("corpus/embedder_manifest.json"));
    auto train = ids_of(examples(m, corpus::Split::kTrain, tok));
    auto val = ids_of(examples(m, corpus::Split::kValidation, tok));
    auto mc = cfg_.transformer();
    mc.vocab_size = static_cast<int>(tok.vocab_size());
    auto result = embed::train_clm<T>(mc, train, val, cfg_.embedder.train, [this](const embed::ClmLogRow& r) {
      log("clm_eval", {{"step", r.step}, {"train_loss", r.train_loss}, {"train_loss_ma", r.train_loss_ma},
                       {"val_loss", r.val_loss}});
    });
    result.best.corpus_manifest_ref = file_sha256(path("corpus/embedder_manifest.json"));
    embed::save_checkpoint(path("embedder/checkpoint"), result.best);
    write_file(path("embedder/clm_log.csv"), embed::clm_log_csv(result.log));
  }

  void stage_w2v() {
    auto tok = load_tokenizer();
    auto m = corpus::load_manifest(path("corpus/embedder_manifest.json"));
    auto train = ids_of(examples(m, corpus::Split::kTrain, tok));
    const std::string ref = file_sha256(path("corpus/embedder_manifest.json"));
    for (const auto& wc : cfg_.baseline_w2v.models) {
      const std::string mode = embed::to_string(wc.mode);
      auto seed = seed_from(std::to_string(cfg_.embedder.train.seed) + ":w2v:" + mode);
      auto table = embed::train_word2vec<T>(wc, train, tok.vocab_size(), seed);
      embed::save_word2vec(path("baseline_w2v/" + mode), wc, table, ref);
      log("w2v_trained", {{"mode", mode}});
    }
  }

  void stage_grid() {
    auto tok = load_tokenizer();
    auto m = corpus::load_manifest(path("corpus/classifier_manifest.json"));
    auto train = examples(m, corpus::Split::kTrain, tok);
    auto val = examples(m, corpus::Split::kValidation, tok);
    const std::string manifest_ref = file_sha256(path("corpus/classifier_manifest.json"));
    Json index = Json::array();
    for (std::size_t i = 0; i < cfg_.classifier.grid.size(); ++i) {
      const auto& entry = cfg_.classifier.grid[i];
      const auto seed = grid_seed(cfg_, i);
      const std::string dir = "grid/" + detail::slug(i);
      log("run_start", {{"run", entry.name}, {"index", i}, {"seed", seed}});

      // A fresh copy of the embedder per run: unfrozen runs modify it.
      std::unique_ptr<classify::EmbeddingSource<T>> source;
      std::unique_ptr<embed::EmbedderCheckpoint<T>> ckpt;
      std::string embedder_ref;
      if (entry.embedder == "transformer") {
        ckpt = std::make_unique<embed::EmbedderCheckpoint<T>>(embed::load_checkpoint<T>(path("embedder/checkpoint")));
        source = std::make_unique<classify::TransformerSource<T>>(ckpt->model);
        embedder_ref = file_sha256(path("embedder/checkpoint/weights.bin"));
      } else {
        const std::string wdir = path("baseline_w2v/" + entry.embedder.substr(4));
        source = std::make_unique<classify::TableSource<T>>(embed::load_word2vec<T>(wdir));
        embedder_ref = file_sha256(wdir + "/weights.bin");
      }

      classify::TrainRun run;
      std::vector<eval::MetricsRecord> seen;
      auto on_epoch = [&](const eval::MetricsRecord& r) {
        seen.push_back(r);
        log("epoch", {{"run", entry.name}, {"epoch", r.epoch}, {"loss", r.loss}, {"accuracy", r.accuracy},
                      {"f1", r.f1}, {"train_loss", r.train_loss}});
      };
      try {
        run = classify::train_classifier<T>(entry.config, *source, train, val, seed, on_epoch).run;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDivergedLoss) throw;
        // Divergence is an outcome of the configuration, not a pipeline
        // failure: the run is kept and reported as NA.
        run.config = entry.config;
        run.seed = seed;
        run.per_epoch = seen;
        run.status = "diverged";
        run.verdict = eval::Verdict::kNa;
        std::size_t pos = 0;
        for (const auto& x : val) pos += x.vulnerable;
        run.majority_fraction = eval::majority_fraction(pos, val.size() - pos);
        log("run_diverged", {{"run", entry.name}, {"message", e.what()}});
      }
      run.name = entry.name;
      run.embedder_kind = entry.embedder;
      run.embedder_ref = embedder_ref;
      run.manifest_ref = manifest_ref;
      std::filesystem::create_directories(path(dir));
      write_file(path(dir + "/run.json"), classify::to_json(run).dump(2) + "\n");
      write_file(path(dir + "/metrics.csv"), classify::metrics_csv(run.per_epoch));
      index.push_back({{"name", entry.name}, {"dir", dir}});
      log("run_end", {{"run", entry.name}, {"verdict", eval::to_string(run.verdict)}, {"status", run.status}});
    }
    write_file(path("grid/runs.json"), index.dump(2) + "\n");
  }

  // Re-derives each verdict from the stored epochs and the manifest's
  // validation counts, independent of what the training loop recorded.
  void stage_evaluate() {
    auto m = corpus::load_manifest(path("corpus/classifier_manifest.json"));
    std::size_t pos = 0, neg = 0;
    for (const auto& mem : m.members) {
      if (mem.split != corpus::Split::kValidation) continue;
      (mem.label == corpus::Label::kVulnerable ? pos : neg) += 1;
    }
    const double majority = eval::majority_fraction(pos, neg);
    Json runs = Json::array();
    for (const auto& item : Json::parse(read_file(path("grid/runs.json")))) {
      const std::string file = path(item.at("dir").get<std::string>() + "/run.json");
      if (!std::filesystem::exists(file)) throw Error(ErrorKind::kMissingArtifact, "stage evaluate needs " + file);
      auto run = classify::train_run_from_json(Json::parse(read_file(file)));
      eval::Verdict v = eval::Verdict::kNa;
      if (run.status == "completed" && !run.per_epoch.empty()) v = eval::na_verdict(run.per_epoch, majority);
      Json r = {{"name", run.name},
                {"embedder", run.embedder_kind},
                {"freeze_embedder", run.config.freeze_embedder},
                {"optimizer", run.config.optimizer.label()},
                {"config", classify::to_json(run.config)},
                {"seed", run.seed},
                {"status", run.status},
                {"verdict", eval::to_string(v)},
                {"majority_fraction", majority}};
      if (v == eval::Verdict::kImproved) {
        r["best"] = eval::to_json(run.per_epoch[eval::best_epoch_index(run.per_epoch)]);
      }
      runs.push_back(r);
    }
    write_file(path("evaluate/evaluation.json"),
               Json{{"validation_positive", pos}, {"validation_negative", neg}, {"runs", runs}}.dump(2) + "\n");
  }

  void write_table(const std::string& stem, const eval::Table& t) {
    write_file(path("report/" + stem + ".md"), t.markdown());
    write_file(path("report/" + stem + ".csv"), t.csv());
  }

  void stage_report() {
    const auto emb = corpus::load_manifest(path("corpus/embedder_manifest.json"));
    const auto cls = corpus::load_manifest(path("corpus/classifier_manifest.json"));
    std::map<std::string, eval::Table> tables;
    tables["corpus_counts"] = eval::corpus_counts_table("Dataset Size by Construction Stage", emb, cls,
                                                        cfg_.corpus.max_tokens);

    std::vector<eval::LossPoint> points;
    auto log_rows = eval::detail::parse_csv(read_file(path("embedder/clm_log.csv")));
    for (std::size_t i = 1; i < log_rows.size(); ++i) {
      // step,train_loss,train_loss_ma100,val_loss
      points.push_back({std::stol(log_rows[i].at(0)), std::stod(log_rows[i].at(2)), std::stod(log_rows[i].at(3))});
    }
    tables["embedder_validation"] =
        eval::best_loss_table(cfg_.report.model_name + " Five Best Loss Scores by Validation Step", points, 5);

    auto evaluation = Json::parse(read_file(path("evaluate/evaluation.json")));
    std::vector<eval::ReportRow> unfrozen, frozen;
    std::map<std::string, std::vector<eval::ReportRow>> by_embedder;
    for (const auto& r : evaluation.at("runs")) {
      const std::string label = r.at("optimizer").get<std::string>();
      eval::ReportRow row = r.contains("best")
                                ? eval::row_from_record(label, eval::metrics_record_from_json(r["best"]))
                                : eval::na_row(label);
      const std::string kind = r.at("embedder").get<std::string>();
      if (kind == "transformer") (r.at("freeze_embedder").get<bool>() ? frozen : unfrozen).push_back(row);
      row.configuration = display_name(kind) + " " + label + (r.at("freeze_embedder").get<bool>() ? " (frozen)" : "");
      by_embedder[kind].push_back(row);
    }
    tables["grid_unfrozen"] = eval::grid_table(cfg_.report.model_name + " Metrics (Unfrozen Embedder Layers)", unfrozen);
    tables["grid_frozen"] = eval::grid_table(cfg_.report.model_name + " Metrics (Frozen Embedder Layers)", frozen);

    // Best run per embedder (improved runs only; all-NA embedders get an NA row).
    std::vector<eval::ReportRow> best;
    for (const auto& [kind, rows] : by_embedder) {
      auto sorted = eval::comparison_rows(rows, {});
      best.push_back(sorted.front().na ? eval::na_row(display_name(kind)) : sorted.front());
    }
    std::vector<eval::ReportRow> external;
    if (!cfg_.report.external_csv.empty()) external = eval::parse_external_rows(read_file(cfg_.report.external_csv));
    tables["comparison"] = eval::comparison_table("Best Performing Neural Networks", best, external);

    std::string combined;
    for (const auto& stem : report_tables()) {
      write_table(stem, tables.at(stem));
      combined += tables.at(stem).markdown() + "\n";
    }
    write_file(path("report/report.md"), combined);
  }

  std::string display_name(const std::string& kind) const {
    if (kind == "w2v-cbow") return "word2vec CBOW";
    if (kind == "w2v-skipgram") return "word2vec Skip-Gram";
    return cfg_.report.model_name;
  }

  PipelineConfig cfg_;
  std::string hash_;
};

}  // namespace irvd::pipeline
