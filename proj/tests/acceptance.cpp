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

// Acceptance suite. Prints one line per criterion:
//
//   criterion N: PASS|FAIL  <title>  <measured values>  (<seconds>s)
//
// Usage: acceptance [N ...]   (no arguments runs all ten)
// Exit status is non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "irvd/classify/train.hpp"
#include "irvd/corpus/manifest.hpp"
#include "irvd/embed/clm.hpp"
#include "irvd/embed/transformer.hpp"
#include "irvd/eval/metrics.hpp"
#include "irvd/eval/report.hpp"
#include "irvd/ir/extract.hpp"
#include "irvd/ir/normalize.hpp"
#include "irvd/ir/records.hpp"
#include "irvd/nn/container.hpp"
#include "irvd/nn/gradcheck.hpp"
#include "irvd/pipeline/config.hpp"
#include "irvd/pipeline/run.hpp"
#include "irvd/synth/generator.hpp"
#include "irvd/tokenizer/bpe.hpp"

#ifndef IRVD_SOURCE_DIR
#define IRVD_SOURCE_DIR "."
#endif

namespace {

namespace fs = std::filesystem;
using namespace irvd;
using nlohmann::json;
using tokenizer::TokenId;
using nn::Mat;

// Pinned tolerances.
constexpr double kF1Target = 0.897;
constexpr double kF1Tolerance = 0.0005;
constexpr double kGradTolerance = 1e-3;
constexpr double kClmLossTarget = 0.05;
constexpr double kSyntheticAccuracy = 0.90;
constexpr double kSyntheticMinutes = 30.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; the first few messages are kept.
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures < 3) errors += " [failed: " + what + "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
  std::string errors;
};

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string source_path(const std::string& rel) { return std::string(IRVD_SOURCE_DIR) + "/" + rel; }

std::string scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("irvd_acceptance_" + name);
  fs::remove_all(d);
  return d.string();
}

std::vector<TokenId> random_ids(Rng& rng, std::size_t n, int vocab) {
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab)));
  return ids;
}

template <typename T>
void scramble(embed::Transformer<T>& m, std::uint64_t seed, double bound = 0.5) {
  Rng rng(seed);
  for (auto* p : m.params()) nn::init_uniform(p->value, rng, bound);
}

// Vulnerable iff token 7 occurs; lengths 3..8 over a 10-token vocabulary.
std::vector<classify::Example> planted(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<classify::Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    classify::Example e;
    const auto len = 3 + rng.below(6);
    for (std::uint64_t t = 0; t < len; ++t) {
      auto id = static_cast<TokenId>(rng.below(9));
      e.ids.push_back(id == 7 ? 8 : id);
    }
    e.vulnerable = i % 2 == 0;
    if (e.vulnerable) e.ids[rng.below(e.ids.size())] = 7;
    out.push_back(e);
  }
  return out;
}

// 1. F1 from the reported precision and recall, by formula and by counts.
void metric_consistency(Outcome& o) {
  const double by_formula = eval::f1_score(0.902, 0.892);
  // tp / (tp + fp) = 0.902 and tp / (tp + fn) = 0.892 exactly.
  const eval::ConfusionMatrix cm{804584, 87416, 1000000, 97416};
  const auto s = eval::metrics(cm);
  o.detail << "f1(formula)=" << fixed(by_formula, 5) << " f1(counts)=" << fixed(s.f1, 5);
  o.expect(std::abs(s.precision - 0.902) < 1e-12 && std::abs(s.recall - 0.892) < 1e-12, "count construction");
  o.expect(std::abs(by_formula - kF1Target) <= kF1Tolerance, "formula route");
  o.expect(std::abs(s.f1 - kF1Target) <= kF1Tolerance, "counts route");
}

// 2. Causality over 100 random configurations and inputs.
void causality(Outcome& o) {
  Rng rng(2026);
  int logit_cases = 0, grad_cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    embed::TransformerConfig c;
    c.n_layers = 1 + static_cast<int>(rng.below(3));
    c.n_heads = 1 << rng.below(3);
    c.d_model = c.n_heads * (2 + static_cast<int>(rng.below(3)));
    c.d_ff = 4 * c.d_model;
    c.vocab_size = 5 + static_cast<int>(rng.below(26));
    c.max_positions = 24;
    c.dropout = 0.0;
    const std::size_t len = 2 + rng.below(15);
    const auto seed = rng.next_u64();
    auto ids = random_ids(rng, len, c.vocab_size);

    // Route 1: perturbing token j leaves logits before j bitwise unchanged.
    embed::Transformer<float> mf(c, seed);
    scramble(mf, seed + 1);
    auto before = mf.logits(mf.embed(ids));
    const auto j = rng.below(len);
    auto perturbed = ids;
    perturbed[j] = static_cast<TokenId>((ids[j] + 1 + rng.below(static_cast<std::uint64_t>(c.vocab_size - 1))) %
                                        static_cast<std::uint64_t>(c.vocab_size));
    auto after = mf.logits(mf.embed(perturbed));
    bool past_same = true;
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(j); ++r) past_same &= before.row(r) == after.row(r);
    const bool here_moved = !(before.row(static_cast<Eigen::Index>(j)) == after.row(static_cast<Eigen::Index>(j)));
    o.expect(past_same, "logits before perturbed position changed (trial " + std::to_string(trial) + ")");
    o.expect(here_moved, "perturbed position unchanged (trial " + std::to_string(trial) + ")");
    logit_cases += past_same && here_moved;

    // Route 2: backpropagating a loss on position i gives exactly zero
    // gradient at every later input position.
    embed::Transformer<double> md(c, seed);
    scramble(md, seed + 1);
    embed::Transformer<double>::Cache cache;
    auto h = md.forward(ids, &cache);
    const auto i = static_cast<Eigen::Index>(rng.below(len));
    Mat<double> dh = Mat<double>::Zero(h.rows(), h.cols());
    for (Eigen::Index col = 0; col < dh.cols(); ++col) dh(i, col) = rng.normal();
    auto dx = md.backward(cache, dh);
    bool future_zero = true;
    for (Eigen::Index r = i + 1; r < dx.rows(); ++r) future_zero &= (dx.row(r).array() == 0.0).all();
    o.expect(future_zero, "nonzero gradient into the future (trial " + std::to_string(trial) + ")");
    o.expect(dx.row(i).norm() > 0.0, "no gradient at own position (trial " + std::to_string(trial) + ")");
    grad_cases += future_zero;
  }
  o.detail << "logit cases ok " << logit_cases << "/100, gradient cases ok " << grad_cases << "/100";
}

// 3. Finite-difference gradient checks, 10 seeds each.
void gradient_checks(Outcome& o) {
  double worst_tf = 0, worst_lstm = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    embed::TransformerConfig c;
    c.n_layers = 1;
    c.d_model = 4;
    c.n_heads = 2;
    c.d_ff = 16;
    c.max_positions = 16;
    c.vocab_size = 11;
    c.dropout = 0.0;
    embed::Transformer<double> m(c, seed);
    scramble(m, seed + 100);
    Rng rng(seed);
    auto ids = random_ids(rng, 6, c.vocab_size);
    nn::zero_grads(m.params());
    m.clm_loss(ids, 1.0);
    auto r = nn::check_gradients(m.params(), [&] { return m.clm_loss(ids).loss_sum; });
    worst_tf = std::max(worst_tf, r.max_rel_error);
    o.expect(r.max_rel_error < kGradTolerance, "transformer seed " + std::to_string(seed) + " at " + r.worst);

    classify::ClassifierConfig cc;
    cc.lstm_layers = 1;
    cc.hidden_units = 3;
    cc.dropout = 0.0;
    classify::LstmClassifier<double> lstm(2, cc, seed);
    for (auto* p : lstm.params()) nn::init_uniform(p->value, rng, 0.8);
    std::vector<Mat<double>> data;
    for (Eigen::Index len : {4, 2, 3}) {
      Mat<double> x(len, 2);
      for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
      data.push_back(x);
    }
    std::vector<const Mat<double>*> xs = {&data[0], &data[1], &data[2]};
    std::vector<double> y = {1, 0, 1};
    nn::zero_grads(lstm.params());
    lstm.forward_backward(xs, y, nullptr, true);
    auto rl = nn::check_gradients(lstm.params(), [&] { return lstm.forward_backward(xs, y, nullptr, false); });
    worst_lstm = std::max(worst_lstm, rl.max_rel_error);
    o.expect(rl.max_rel_error < kGradTolerance, "lstm seed " + std::to_string(seed) + " at " + rl.worst);
  }
  o.detail << "max rel error transformer=" << worst_tf << " lstm=" << worst_lstm << " (tol " << kGradTolerance << ")";
}

// 4. Frozen embedder is bitwise untouched; unfrozen moves.
void freeze_invariant(Outcome& o) {
  auto data = planted(24, 5);
  embed::TransformerConfig tc;
  tc.n_layers = 1;
  tc.d_model = 8;
  tc.n_heads = 2;
  tc.d_ff = 16;
  tc.vocab_size = 10;
  tc.max_positions = 16;
  embed::Transformer<float> model(tc, 3);
  classify::TransformerSource<float> emb(model);
  classify::ClassifierConfig cfg;
  cfg.lstm_layers = 1;
  cfg.hidden_units = 8;
  cfg.epochs = 5;
  cfg.batch_size = 6;
  cfg.optimizer.kind = nn::OptimizerSpec::Kind::kAdam;
  cfg.optimizer.learning_rate = 0.01;

  const auto before = emb.digest();
  auto frozen = classify::train_classifier(cfg, emb, data, data, 1);
  o.expect(frozen.run.per_epoch.size() == 5, "frozen run did not train 5 epochs");
  const bool frozen_stable = emb.digest() == before;
  o.expect(frozen_stable, "frozen digest changed");
  o.expect(frozen.run.embedder_digest_after == frozen.run.embedder_digest_before, "recorded digests differ");

  cfg.freeze_embedder = false;
  auto snapshot = nn::snapshot(model.params());
  classify::train_classifier(cfg, emb, data, data, 1);
  std::size_t changed = 0;
  auto ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) changed += !(ps[i]->value == snapshot[i].value);
  o.expect(changed > 0, "unfrozen training left every tensor unchanged");
  o.expect(emb.digest() != before, "unfrozen digest unchanged");
  o.detail << "frozen digest stable=" << (frozen_stable ? "yes" : "no") << ", unfrozen tensors changed "
           << changed << "/" << ps.size();
}

// 5. Both models can memorize a tiny set.
void memorization(Outcome& o) {
  embed::TransformerConfig c;
  c.n_layers = 2;
  c.d_model = 32;
  c.n_heads = 4;
  c.d_ff = 128;
  c.max_positions = 16;
  c.vocab_size = 24;
  c.dropout = 0.0;
  // Distinct first tokens make every continuation a function of its prefix.
  Rng rng(5);
  std::vector<std::vector<TokenId>> seqs;
  for (int s = 0; s < 10; ++s) {
    std::vector<TokenId> ids{static_cast<TokenId>(s)};
    for (int t = 0; t < 9; ++t) ids.push_back(static_cast<TokenId>(rng.below(24)));
    seqs.push_back(ids);
  }
  embed::ClmTrainOptions opts;
  opts.epochs = 400;  // one batch per epoch, so 400 steps
  opts.batch_size = 10;
  opts.learning_rate = 1e-2;
  opts.warmup_steps = 10;
  opts.eval_every = 50;
  opts.seed = 3;
  auto r = embed::train_clm<float>(c, seqs, seqs, opts);
  const double clm_loss = embed::clm_eval_loss(r.best.model, seqs);
  o.expect(r.total_steps <= 400, "step budget exceeded");
  o.expect(clm_loss < kClmLossTarget, "CLM loss " + fixed(clm_loss));

  auto data = planted(20, 4);
  Rng trng(4);
  Mat<float> table(10, 8);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = static_cast<float>(trng.normal());
  classify::TableSource<float> emb(table);
  classify::ClassifierConfig cfg;
  cfg.batch_size = 4;
  cfg.optimizer.kind = nn::OptimizerSpec::Kind::kAdam;
  cfg.optimizer.learning_rate = 0.01;
  auto t = classify::train_classifier(cfg, emb, data, data, 11);
  int first_perfect = 0;
  for (const auto& e : t.run.per_epoch) {
    if (e.train_accuracy == 1.0) {
      first_perfect = e.epoch;
      break;
    }
  }
  o.expect(t.run.per_epoch.size() <= 50, "more than 50 epochs");
  o.expect(first_perfect > 0, "LSTM never reached 100% training accuracy");
  o.detail << "CLM loss " << fixed(clm_loss) << " after " << r.total_steps << " steps; LSTM 100% at epoch "
           << first_perfect << " of " << cfg.epochs;
}

json synthetic_config(const std::string& work) {
  return {
      {"work_dir", work},
      {"synth",
       {{"enabled", true},
        {"n_functions", 500},
        {"vulnerable_fraction", 0.4},
        {"seed", 7},
        {"n_background", 500},
        {"style", "raw"}}},
      {"tokenizer", {{"vocab_size", 1024}, {"max_len", 2048}}},
      {"embedder",
       {{"model", {{"n_layers", 2}, {"d_model", 32}, {"n_heads", 4}, {"d_ff", 128}}},
        {"train",
         {{"epochs", 3},
          {"eval_every", 50},
          {"batch_size", 16},
          {"learning_rate", 0.002},
          {"warmup_steps", 20},
          {"seed", 1}}}}},
      {"classifier",
       {{"defaults", {{"lstm_layers", 2}, {"hidden_units", 32}, {"epochs", 15}, {"batch_size", 32}}},
        {"grid",
         json::array({{{"optimizer", {{"kind", "adam"}, {"learning_rate", 0.001}}}},
                      {{"optimizer", {{"kind", "sgd_momentum"}, {"learning_rate", 0.01}, {"momentum", 0.9}}}}})}}},
      {"report", {{"external_csv", source_path("data/external_prior_work.csv")}, {"model_name", "GPT-2"}}},
  };
}

std::string synthetic_work_dir() { return (fs::temp_directory_path() / "irvd_acceptance_synthetic").string(); }

// 6. Full pipeline on the synthetic corpus, plus the rule oracle on the
// exact labeled set the classifier saw.
void synthetic_end_to_end(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const auto work = scratch_dir("synthetic");
  pipeline::Pipeline p(pipeline::config_from_json(synthetic_config(work)));
  p.run(pipeline::Stage::kAll);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;

  auto evaluation = json::parse(read_file(work + "/evaluate/evaluation.json"));
  double best = 0;
  std::string best_name;
  for (const auto& r : evaluation["runs"]) {
    if (r["embedder"] != "transformer" || r["status"] != "completed") continue;
    const double acc = r["best"]["accuracy"];
    if (acc > best) {
      best = acc;
      best_name = r["name"];
    }
  }
  o.expect(best >= kSyntheticAccuracy, "best validation accuracy " + fixed(best));
  o.expect(minutes < kSyntheticMinutes, "took " + fixed(minutes, 1) + " min");

  std::unordered_map<std::string, std::string> text_by_hash;
  for (const auto& r : ir::read_jsonl(work + "/normalize/functions.jsonl")) text_by_hash[r.hash] = r.text;
  auto manifest = corpus::load_manifest(work + "/corpus/classifier_manifest.json");
  std::size_t agree = 0, labeled = 0;
  for (const auto& m : manifest.members) {
    if (m.label == corpus::Label::kUnlabeled) continue;
    ++labeled;
    agree += synth::rule_oracle(text_by_hash.at(m.hash)) == (m.label == corpus::Label::kVulnerable);
  }
  o.expect(labeled == 500, "classifier dataset has " + std::to_string(labeled) + " labeled functions");
  o.expect(agree == labeled, "oracle disagrees on " + std::to_string(labeled - agree));
  o.detail << "best validation accuracy " << fixed(best, 3) << " (" << best_name << "), oracle " << agree << "/"
           << labeled << ", " << fixed(minutes, 1) << " min";
}

// Consistent random renaming of every renamable identifier, plus whitespace
// and comment jitter. The result differs from the input only in spelling.
std::string alpha_rename(const std::string& text, Rng& rng) {
  static const auto allow = [] {
    const auto& v = ir::default_stdlib_allowlist();
    return std::unordered_set<std::string>(v.begin(), v.end());
  }();
  std::unordered_map<std::string, std::string> locals, globals;
  std::size_t counter = 0;
  auto fresh = [&](std::unordered_map<std::string, std::string>& map, const std::string& name) {
    auto it = map.find(name);
    if (it != map.end()) return it->second;
    std::string s = "q";
    for (std::uint64_t k = 0, n = 2 + rng.below(8); k < n; ++k) s += static_cast<char>('a' + rng.below(26));
    s += "_" + std::to_string(++counter);
    return map[name] = s;
  };
  static const std::regex sigil(R"(([%@])([-A-Za-z$._0-9]+))");
  static const std::regex label_def(R"(^([-A-Za-z$._0-9]+):(.*)$)");
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, label_def)) line = fresh(locals, m[1].str()) + ":" + m[2].str();
    std::string rewritten;
    auto begin = std::sregex_iterator(line.begin(), line.end(), sigil);
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      const auto& mm = *it;
      rewritten += line.substr(last, static_cast<std::size_t>(mm.position()) - last);
      const std::string name = mm[2].str();
      if (mm[1] == "%") {
        rewritten += "%" + fresh(locals, name);
      } else if (name.rfind("llvm.", 0) == 0 || allow.count(name)) {
        rewritten += mm.str();
      } else {
        rewritten += "@" + fresh(globals, name);
      }
      last = static_cast<std::size_t>(mm.position() + mm.length());
    }
    rewritten += line.substr(last);
    if (!rewritten.empty() && (rewritten[0] == ' ' || rewritten[0] == '\t')) {
      rewritten = std::string(1 + rng.below(6), rng.bernoulli(0.5) ? ' ' : '\t') +
                  rewritten.substr(rewritten.find_first_not_of(" \t"));
      if (rng.bernoulli(0.2)) rewritten += "  ; jitter";
    }
    out += rewritten + "\n";
  }
  return out;
}

// 7. Normalizer idempotence and alpha-equivalence on 1,000 fixtures.
void normalizer_properties(Outcome& o) {
  std::vector<synth::SyntheticModule> fixtures;
  for (std::uint64_t seed = 0; fixtures.size() < 1000; ++seed) {
    synth::GeneratorSpec s;
    s.n_functions = 40;
    s.n_background = 10;
    s.seed = 1000 + seed;
    s.difficulty = static_cast<int>(seed % 4);
    for (auto& m : synth::generate(s)) {
      if (fixtures.size() < 1000) fixtures.push_back(std::move(m));
    }
  }
  Rng rng(77);
  std::size_t idempotent = 0, collapsed = 0, pair_dedupe = 0, spelled_differently = 0;
  std::vector<ir::NormalizedFunction> originals, clones;
  for (const auto& fx : fixtures) {
    const auto renamed = alpha_rename(fx.text, rng);
    spelled_differently += renamed != fx.text;
    auto f = ir::extract_functions({fx.path, fx.text}).at(0);
    auto g = ir::extract_functions({fx.path + ".renamed", renamed}).at(0);
    auto nf = ir::normalize(f, 1);
    auto ng = ir::normalize(g, 1);
    auto again = ir::renormalize(nf, 1);
    idempotent += again.canonical_text == nf.canonical_text && again.content_hash == nf.content_hash;
    collapsed += ng.canonical_text == nf.canonical_text;
    pair_dedupe += ir::dedupe({nf, ng}).size() == 1;
    originals.push_back(nf);
    clones.push_back(ng);
  }
  const auto distinct = ir::dedupe(originals).size();
  auto both = originals;
  both.insert(both.end(), clones.begin(), clones.end());
  const auto distinct_both = ir::dedupe(both).size();
  o.expect(spelled_differently == fixtures.size(), "renamer left some fixtures unchanged");
  o.expect(idempotent == fixtures.size(), "idempotence");
  o.expect(collapsed == fixtures.size(), "alpha-equivalence");
  o.expect(pair_dedupe == fixtures.size(), "clone pairs dedupe");
  o.expect(distinct_both == distinct, "clones survive corpus dedupe");
  o.detail << "fixtures " << fixtures.size() << ": idempotent " << idempotent << ", renamed collapse " << collapsed
           << ", pairs deduped " << pair_dedupe << ", corpus dedupe " << distinct_both << "=" << distinct;
}

// 8. Byte-exact tokenizer round-trip.
void tokenizer_round_trip(Outcome& o) {
  synth::GeneratorSpec s;
  s.n_functions = 500;
  s.vulnerable_fraction = 0.4;
  s.seed = 7;
  s.n_background = 500;
  auto raw = synth::generate(s);
  s.style = synth::Style::kCanonical;
  auto canonical = synth::generate(s);
  std::vector<std::string> texts;
  for (const auto& m : canonical) texts.push_back(m.text);
  auto tok = tokenizer::TokenizerModel::train(texts, {1024, 2});
  const auto dir = scratch_dir("tokenizer");
  tok.save(dir);
  auto loaded = tokenizer::TokenizerModel::load(dir);

  std::size_t bytes_ok = 0, synth_ok = 0, synth_total = 0;
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    std::string x(rng.below(257), '\0');
    for (auto& ch : x) ch = static_cast<char>(rng.below(256));
    bytes_ok += tok.decode(tok.encode(x)) == x && loaded.decode(loaded.encode(x)) == x;
  }
  for (const auto* set : {&raw, &canonical}) {
    for (const auto& m : *set) {
      ++synth_total;
      synth_ok += tok.decode(tok.encode(m.text)) == m.text && loaded.decode(loaded.encode(m.text)) == m.text;
    }
  }
  // 1024 is a budget; training stops early once no pair reaches min_frequency.
  o.expect(tok.vocab_size() > tokenizer::kBaseVocab && tok.vocab_size() <= 1024,
           "vocab size " + std::to_string(tok.vocab_size()));
  o.expect(bytes_ok == 1000, "random bytes");
  o.expect(synth_ok == synth_total, "synthetic functions");
  o.detail << "vocab " << tok.vocab_size() << ", random byte strings " << bytes_ok << "/1000, synthetic functions " << synth_ok << "/" << synth_total;
  fs::remove_all(dir);
}

// 9. NA rule on an imbalanced toy validation set (3 vulnerable, 7 clean).
void na_rule(Outcome& o) {
  const std::vector<bool> truth = {true, false, false, true, false, false, false, true, false, false};
  const double majority = eval::majority_fraction(3, 7);
  auto run = [&](const std::function<bool(std::size_t, int)>& predict) {
    std::vector<eval::MetricsRecord> per_epoch;
    for (int epoch = 1; epoch <= 5; ++epoch) {
      eval::ConfusionMatrix cm;
      for (std::size_t i = 0; i < truth.size(); ++i) cm.add(predict(i, epoch), truth[i]);
      per_epoch.push_back(eval::make_record(epoch, 0.6, cm));
    }
    return per_epoch;
  };
  auto always_clean = run([](std::size_t, int) { return false; });
  auto always_vuln = run([](std::size_t, int) { return true; });
  // Catches exactly one vulnerable sample in the last epoch: 8/10 > 7/10.
  auto one_better = run([&](std::size_t i, int epoch) { return epoch == 5 && i == 0; });
  const auto v_clean = eval::na_verdict(always_clean, majority);
  const auto v_vuln = eval::na_verdict(always_vuln, majority);
  const auto v_better = eval::na_verdict(one_better, majority);
  o.expect(v_clean == eval::Verdict::kNa, "constant clean not NA");
  o.expect(v_vuln == eval::Verdict::kNa, "constant vulnerable not NA");
  o.expect(v_better == eval::Verdict::kImproved, "one-sample improvement not reported");
  o.expect(one_better.back().accuracy == 0.8, "toy accuracy");

  // The rendered row carries the verdict.
  auto table = eval::grid_table("", {eval::na_row("constant"), eval::row_from_record("better", one_better.back())});
  const auto md = table.markdown();
  o.expect(md.find("| constant | NA |") != std::string::npos, "NA row rendering");
  o.expect(md.find("| better | 5 |") != std::string::npos, "improved row rendering");
  o.detail << "majority " << majority << ": constant-clean " << eval::to_string(v_clean) << ", constant-vulnerable "
           << eval::to_string(v_vuln) << ", +1 sample " << eval::to_string(v_better);
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

// 10. Only the format can be checked here: the shipped config parses to the
// reference setup and every report table has the expected layout.
void report_format(Outcome& o) {
  auto c = pipeline::load_config(source_path("configs/reproduce-juliet.json"));
  const auto& m = c.embedder.model;
  o.expect(m.n_layers == 12 && m.d_model == 100 && m.n_heads == 10 && m.d_ff == 400, "embedder shape");
  o.expect(c.tokenizer.train.vocab_size == 8192 && c.tokenizer.max_len == 2048, "tokenizer");
  o.expect(c.embedder.train.epochs == 20 && c.embedder.train.eval_every == 1000, "embedder training");
  o.expect(c.corpus.exclude_cwe == "CWE-121" && c.corpus.max_tokens == 2048, "corpus filters");
  o.expect(c.corpus.embedder_split.train == 0.9 && c.corpus.classifier_split.train == 0.8, "splits");
  const auto& d = c.classifier.defaults;
  o.expect(d.lstm_layers == 2 && d.hidden_units == 128 && d.dropout == 0.2 && d.epochs == 50, "classifier");
  o.expect(c.classifier.grid.size() == 14, "grid size");
  o.expect(c.baseline_w2v.enabled && c.baseline_w2v.models.size() == 2, "word2vec baselines");
  o.expect(!c.synth.enabled, "synth must be off for the external corpus");
  auto external = eval::parse_external_rows(read_file(source_path(c.report.external_csv)));
  o.expect(external.size() == 2, "external rows");

  // Layout of the tables written by criterion 6's run.
  const auto report = synthetic_work_dir() + "/report/";
  if (!fs::exists(report + "report.md")) {
    o.expect(false, "no report from the synthetic run (criterion 6 must run first)");
    return;
  }
  const auto counts = read_file(report + "corpus_counts.md");
  o.expect(contains(counts, "| Stage | Embedding Corpus | Classifier Clean | Classifier Vulnerable | Classifier Total |"),
           "corpus counts header");
  for (const char* row : {"| Total Functions |", "| Post Duplicate Removal |",
                          "| Post Removal of Functions More than 2048 Tokens |"}) {
    o.expect(contains(counts, row), std::string("corpus counts row ") + row);
  }
  const std::string metric_cols = " | Epoch | Loss | Accuracy | Precision | Recall | F1-Score |";
  o.expect(contains(read_file(report + "grid_frozen.md"), "| Optimizer" + metric_cols), "frozen grid header");
  o.expect(contains(read_file(report + "grid_unfrozen.md"), "| Optimizer" + metric_cols), "unfrozen grid header");
  const auto comparison = read_file(report + "comparison.md");
  o.expect(contains(comparison, "| Model" + metric_cols + " Source |"), "comparison header");
  o.expect(contains(comparison, "| BERT SGD -LR: 0.0001 -Mom: 0.001 | 29 | 0.2625 | 88.8% | 80.1% | 92.5% | 85.9% |"),
           "external row verbatim");
  o.expect(contains(read_file(report + "embedder_validation.md"), "| Step | Training Set | Validation Set |"),
           "embedder loss header");
  for (const auto& stem : pipeline::report_tables()) {
    o.expect(fs::exists(report + stem + ".csv"), stem + ".csv missing");
  }
  o.detail << "reproduce-juliet config: grid " << c.classifier.grid.size() << " runs, model " << m.n_layers << "x"
           << m.d_model << "/" << m.n_heads << " heads; " << pipeline::report_tables().size()
           << " tables in Markdown and CSV; full-scale numbers not asserted";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"metric consistency", metric_consistency},
      {"causality", causality},
      {"gradient checks", gradient_checks},
      {"freeze invariant", freeze_invariant},
      {"memorization", memorization},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"normalizer properties", normalizer_properties},
      {"tokenizer round-trip", tokenizer_round_trip},
      {"NA rule", na_rule},
      {"report format", report_format},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(n)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.errors += std::string(" [exception: ") + e.what() + "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  "
              << o.detail.str() << o.errors << "  (" << fixed(secs, 1) << "s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
