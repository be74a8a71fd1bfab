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

// irvd: command-line driver.
//
//   irvd run <stage> --config FILE [overrides]
//   irvd synth --n 500 --vuln-frac 0.4 --seed 7 --difficulty 0 --out DIR
//   irvd config --config FILE        (prints the resolved config and hash)
//
// Exit status: 0 success, 2 invalid config, 3 missing artifact, 1 other.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "irvd/pipeline/config.hpp"
#include "irvd/pipeline/run.hpp"
#include "irvd/synth/generator.hpp"

namespace {

using nlohmann::json;

struct Overrides {
  std::string work_dir, input_dir, exclude_cwe;
  std::optional<std::size_t> max_tokens;
  std::optional<double> split;
  std::optional<std::uint64_t> seed;
  bool stratify = false;
  std::optional<int> embed_layer;
};

json load_json(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(irvd::read_file(path));
  } catch (const json::exception& e) {
    throw irvd::Error(irvd::ErrorKind::kConfigInvalid, path + ": " + e.what());
  }
}

// Flags are written into the JSON before validation, so they get the same
// field-level checks as the file.
irvd::pipeline::PipelineConfig resolve(const std::string& config_path, const Overrides& o) {
  json j = load_json(config_path);
  if (!o.work_dir.empty()) j["work_dir"] = o.work_dir;
  if (!o.input_dir.empty()) j["input_dir"] = o.input_dir;
  if (!o.exclude_cwe.empty()) j["corpus"]["exclude_cwe"] = o.exclude_cwe;
  if (o.max_tokens) j["corpus"]["max_tokens"] = *o.max_tokens;
  if (o.split) j["corpus"]["classifier_split"] = {{"train", *o.split}, {"validation", 1.0 - *o.split}};
  if (o.seed) j["corpus"]["seed"] = *o.seed;
  if (o.stratify) j["corpus"]["stratify"] = true;
  if (o.embed_layer) j["embedder"]["model"]["embed_layer"] = *o.embed_layer;
  return irvd::pipeline::config_from_json(j);
}

int exit_code(const irvd::Error& e) {
  switch (e.kind()) {
    case irvd::ErrorKind::kConfigInvalid: return 2;
    case irvd::ErrorKind::kMissingArtifact: return 3;
    default: return 1;
  }
}

void print_event(const json& e, bool verbose) {
  if (verbose) {
    std::cerr << e.dump() << "\n";
    return;
  }
  const std::string ev = e.value("event", "");
  if (ev == "stage_start" || ev == "stage_end" || ev == "cache_hit") {
    std::cerr << "[" << ev << "] " << e.value("stage", "") << "\n";
  } else if (ev == "run_end") {
    std::cerr << "  run " << e.value("run", "") << ": " << e.value("verdict", "") << " (" << e.value("status", "")
              << ")\n";
  } else if (ev == "run_diverged") {
    std::cerr << "  run " << e.value("run", "") << " diverged\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLVM IR buffer-overflow detection pipeline"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  std::string stage_name;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Run one pipeline stage, or all of them");
  run->add_option("stage", stage_name,
                  "extract, normalize, corpus, tokenizer, embedder, baseline-w2v, classifier-grid, evaluate, report, "
                  "synth or all")
      ->required();
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--work-dir", o.work_dir, "Override work_dir");
  run->add_option("--input-dir", o.input_dir, "Override input_dir (directory of .ll files)");
  run->add_option("--exclude-cwe", o.exclude_cwe, "CWE tag held out of the embedding corpus");
  run->add_option("--max-tokens", o.max_tokens, "Drop classifier functions longer than this");
  run->add_option("--split", o.split, "Classifier train fraction")->check(CLI::Range(0.0, 1.0));
  run->add_option("--seed", o.seed, "Split seed");
  run->add_flag("--stratify", o.stratify, "Stratify the classifier split by label");
  run->add_option("--embed-layer", o.embed_layer, "Hidden state used as embedding (-1: final)");
  run->add_flag("-v,--verbose", verbose, "Print every log event as JSON");

  auto* show = app.add_subcommand("config", "Print the resolved config and its hash");
  show->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  irvd::synth::GeneratorSpec spec;
  std::string out_dir, style = "raw";
  auto* syn = app.add_subcommand("synth", "Write a synthetic labeled corpus");
  syn->add_option("--n", spec.n_functions, "Number of labeled functions")->default_val(100);
  syn->add_option("--vuln-frac", spec.vulnerable_fraction, "Fraction of vulnerable functions")->default_val(0.4);
  syn->add_option("--seed", spec.seed, "Generator seed")->default_val(0);
  syn->add_option("--difficulty", spec.difficulty, "Label-irrelevant noise level")->default_val(0);
  syn->add_option("--background", spec.n_background, "Unlabeled functions for the embedding corpus")->default_val(0);
  syn->add_option("--style", style, "raw or canonical")->default_val("raw");
  syn->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      irvd::pipeline::Pipeline p(resolve(config_path, o));
      p.on_event = [verbose](const json& e) { print_event(e, verbose); };
      p.run(irvd::pipeline::parse_stage(stage_name));
    } else if (*show) {
      auto cfg = resolve(config_path, o);
      std::cout << irvd::pipeline::to_json(cfg).dump(2) << "\nconfig_hash " << irvd::pipeline::config_hash(cfg)
                << "\n";
    } else if (*syn) {
      spec.style = irvd::synth::parse_style(style);
      auto modules = irvd::synth::generate(spec);
      irvd::synth::write_corpus(out_dir, modules);
      std::size_t vuln = 0, labeled = 0;
      for (const auto& m : modules) {
        labeled += m.vulnerable.has_value();
        vuln += m.vulnerable.value_or(false);
      }
      std::cerr << "wrote " << modules.size() << " modules (" << vuln << " vulnerable of " << labeled
                << " labeled) to " << out_dir << "\n";
    }
  } catch (const irvd::Error& e) {
    std::cerr << "irvd: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "irvd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
