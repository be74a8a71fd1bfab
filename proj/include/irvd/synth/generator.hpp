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

// Small labeled corpus of LLVM-like functions with a planted stack buffer
// overflow motif. Vulnerable functions copy into a fixed-size alloca with no
// length check; clean ones branch away when the length exceeds the buffer.
// The bounds check is always `icmp ugt i64`, and nothing else ever emits
// that predicate/type pair, so rule_oracle() decides every label exactly.
//
// Three independent random streams per function (content, noise, labels)
// keep the labels and the deciding motif fixed when only `difficulty`
// changes.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/ir/extract.hpp"
#include "irvd/ir/normalize.hpp"
#include "irvd/random.hpp"

namespace irvd::synth {

enum class Style { kRaw, kCanonical };

inline const char* to_string(Style s) { return s == Style::kRaw ? "raw" : "canonical"; }

inline Style parse_style(const std::string& s) {
  if (s == "raw") return Style::kRaw;
  if (s == "canonical") return Style::kCanonical;
  throw Error(ErrorKind::kConfigInvalid, "synth style must be 'raw' or 'canonical', got '" + s + "'");
}

struct GeneratorSpec {
  std::size_t n_functions = 100;  // labeled CWE-121 functions
  double vulnerable_fraction = 0.4;
  std::uint64_t seed = 0;
  int min_buffer = 8;
  int max_buffer = 128;
  int difficulty = 0;  // extra label-irrelevant instructions, about 2 per level per site
  Style style = Style::kRaw;
  std::size_t n_background = 0;  // unlabeled functions of other kinds, for the embedding corpus

  void validate() const {
    if (n_functions < 10) throw Error(ErrorKind::kConfigInvalid, "synth n_functions must be >= 10");
    if (!(vulnerable_fraction > 0.0 && vulnerable_fraction < 1.0)) {
      throw Error(ErrorKind::kConfigInvalid, "synth vulnerable_fraction must lie in (0, 1)");
    }
    if (min_buffer < 2 || max_buffer < min_buffer) {
      throw Error(ErrorKind::kConfigInvalid, "synth buffer range must satisfy 2 <= min <= max");
    }
    if (difficulty < 0) throw Error(ErrorKind::kConfigInvalid, "synth difficulty must be >= 0");
  }

  std::size_t n_vulnerable() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n_functions) * vulnerable_fraction));
  }
};

struct SyntheticModule {
  std::string path;      // relative to the output directory
  std::string function;  // defined name as written in `text`
  std::string text;
  std::optional<bool> vulnerable;  // nullopt for background functions
};

// True when `text` (raw or canonical, or a decoded token stream) carries
// no bounds check, i.e. the copy is unguarded.
inline bool rule_oracle(std::string_view text) { return text.find("icmp ugt i64") == std::string_view::npos; }

namespace detail {

enum class Sink { kLlvmMemcpy, kLlvmMemmove, kMemcpy, kStrcpy };

class Body {
 public:
  std::string value(std::string_view stem) {
    ++counter_;
    return "%" + std::string(stem) + std::to_string(counter_);
  }
  std::string label(std::string_view stem) {
    ++counter_;
    return std::string(stem) + std::to_string(counter_);
  }
  void op(const std::string& s) { lines_.push_back("  " + s); }
  void block(const std::string& name) { lines_.push_back(name + ":"); }
  std::string str() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  int counter_ = 0;
  std::vector<std::string> lines_;
};

// Integer bookkeeping that distractors read and write.
struct IntState {
  std::vector<std::string> slots;   // i32* allocas
  std::vector<std::string> values;  // i32 SSA values usable at this point
};

inline void distractor(Body& b, Rng& r, IntState& st) {
  static const char* kArith[] = {"add nsw", "sub nsw", "mul nsw", "xor", "and", "or", "shl"};
  static const char* kPred[] = {"eq", "ne", "slt", "sgt", "sle", "sge"};
  switch (r.below(6)) {
    case 0: {
      auto v = b.value("tmp");
      b.op(v + " = load i32, i32* " + r.pick(st.slots) + ", align 4");
      st.values.push_back(v);
      break;
    }
    case 1: {
      auto v = b.value(r.bernoulli(0.5) ? "add" : "conv");
      b.op(v + " = " + kArith[r.below(7)] + " i32 " + r.pick(st.values) + ", " + std::to_string(r.range(1, 99)));
      st.values.push_back(v);
      break;
    }
    case 2:
      b.op("store i32 " + r.pick(st.values) + ", i32* " + r.pick(st.slots) + ", align 4");
      break;
    case 3:
      b.op("call void @printIntLine(i32 " + r.pick(st.values) + ")");
      break;
    case 4: {
      auto s = b.value("i");
      b.op(s + " = alloca i32, align 4");
      b.op("store i32 " + std::to_string(r.range(0, 255)) + ", i32* " + s + ", align 4");
      st.slots.push_back(s);
      break;
    }
    default: {
      auto c = b.value("cmp");
      auto then_l = b.label("if.then");
      auto end_l = b.label("if.end");
      b.op(c + " = icmp " + kPred[r.below(6)] + " i32 " + r.pick(st.values) + ", " + std::to_string(r.range(0, 64)));
      b.op("br i1 " + c + ", label %" + then_l + ", label %" + end_l);
      b.block(then_l);
      b.op("call void @printIntLine(i32 " + r.pick(st.values) + ")");
      b.op("br label %" + end_l);
      b.block(end_l);
      break;
    }
  }
}

// `base` distractors from the content stream, then the difficulty extras
// from the noise stream.
inline void distract(Body& b, Rng& content, Rng& noise, IntState& st, int base, int difficulty) {
  for (int i = 0; i < base; ++i) distractor(b, content, st);
  for (int i = 0; i < difficulty; ++i) {
    const auto extra = noise.range(1, 3);
    for (std::int64_t k = 0; k < extra; ++k) distractor(b, noise, st);
  }
}

struct FunctionPlan {
  std::string name;
  bool guarded = false;
  bool has_copy = true;
};

inline std::string emit_function(const FunctionPlan& plan, Rng& content, Rng& noise, int min_buffer, int max_buffer,
                                 int difficulty) {
  static const char* kSrc[] = {"data", "source", "input", "src"};
  static const char* kLen[] = {"len", "size", "n", "count"};
  const auto sink = static_cast<Sink>(content.below(4));
  const int n = static_cast<int>(content.range(min_buffer, max_buffer));
  const std::string arr = "[" + std::to_string(n) + " x i8]";
  const std::string src = std::string("%") + kSrc[content.below(4)];
  const std::string len = std::string("%") + kLen[content.below(4)];
  const bool str_sink = sink == Sink::kStrcpy;

  Body b;
  b.block("entry");
  const auto buf = b.value("buf");
  b.op(buf + " = alloca " + arr + ", align 16");
  IntState st;
  st.slots.push_back(b.value("ctr"));
  b.op(st.slots[0] + " = alloca i32, align 4");
  b.op("store i32 " + std::to_string(content.range(0, 9)) + ", i32* " + st.slots[0] + ", align 4");
  st.values.push_back(b.value("tmp"));
  b.op(st.values[0] + " = load i32, i32* " + st.slots[0] + ", align 4");
  distract(b, content, noise, st, static_cast<int>(content.range(1, 3)), difficulty);

  const auto dst = b.value("arraydecay");
  b.op(dst + " = getelementptr inbounds " + arr + ", " + arr + "* " + buf + ", i64 0, i64 0");
  std::string measured = len;
  // A strlen call appears in vulnerable string copies too, so it is not a tell.
  if (str_sink && (plan.guarded || content.bernoulli(0.5))) {
    measured = b.value("call");
    b.op(measured + " = call i64 @strlen(i8* " + src + ")");
    if (!plan.guarded) {
      auto t = b.value("conv");
      b.op(t + " = trunc i64 " + measured + " to i32");
      st.values.push_back(t);
    }
  }
  std::string bail;
  if (plan.guarded) {
    const int limit = str_sink ? n - 1 : n;
    auto big = b.value("cmp");
    bail = b.label("if.bad");
    auto ok = b.label("if.ok");
    b.op(big + " = icmp ugt i64 " + measured + ", " + std::to_string(limit));
    b.op("br i1 " + big + ", label %" + bail + ", label %" + ok);
    b.block(ok);
  }
  if (plan.has_copy) {
    switch (sink) {
      case Sink::kLlvmMemcpy:
        b.op("call void @llvm.memcpy.p0i8.p0i8.i64(i8* align 1 " + dst + ", i8* align 1 " + src + ", i64 " + len +
             ", i1 false)");
        break;
      case Sink::kLlvmMemmove:
        b.op("call void @llvm.memmove.p0i8.p0i8.i64(i8* align 1 " + dst + ", i8* align 1 " + src + ", i64 " + len +
             ", i1 false)");
        break;
      case Sink::kMemcpy:
        b.op(b.value("call") + " = call i8* @memcpy(i8* " + dst + ", i8* " + src + ", i64 " + len + ")");
        break;
      case Sink::kStrcpy:
        b.op(b.value("call") + " = call i8* @strcpy(i8* " + dst + ", i8* " + src + ")");
        break;
    }
    b.op("call void @printLine(i8* " + dst + ")");
  }
  distract(b, content, noise, st, static_cast<int>(content.range(0, 2)), difficulty);
  b.op("ret void");
  if (plan.guarded) {
    b.block(bail);
    b.op("call void @printLine(i8* getelementptr inbounds ([14 x i8], [14 x i8]* @.str, i64 0, i64 0))");
    b.op("ret void");
  }

  std::string params = "i8* " + src;
  if (!str_sink) params += ", i64 " + len;
  return "define dso_local void @" + plan.name + "(" + params + ") #0 {\n" + b.str() + "}\n";
}

inline std::string raw_module(const std::string& module_id, const std::string& function) {
  return "; ModuleID = '" + module_id + "'\n"
         "source_filename = \"" + module_id + "\"\n"
         "target triple = \"x86_64-pc-linux-gnu\"\n\n"
         "@.str = private unnamed_addr constant [14 x i8] c\"input too big\\00\", align 1\n\n" +
         function +
         "\ndeclare void @printLine(i8*)\n"
         "declare void @printIntLine(i32)\n"
         "declare i64 @strlen(i8*)\n"
         "declare i8* @strcpy(i8*, i8*)\n"
         "declare i8* @memcpy(i8*, i8*, i64)\n"
         "declare void @llvm.memcpy.p0i8.p0i8.i64(i8*, i8*, i64, i1)\n"
         "declare void @llvm.memmove.p0i8.p0i8.i64(i8*, i8*, i64, i1)\n\n"
         "attributes #0 = { noinline nounwind }\n";
}

inline std::string canonical_module(const std::string& raw_text) {
  auto fs = ir::extract_functions({"", raw_text});
  return ir::normalize(fs.at(0), 1).canonical_text + "\n";
}

inline std::string index4(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

}  // namespace detail

// Deterministic in `spec`. Labeled modules come first (in index order),
// then background modules.
inline std::vector<SyntheticModule> generate(const GeneratorSpec& spec) {
  spec.validate();
  const bool raw = spec.style == Style::kRaw;
  const std::string s = std::to_string(spec.seed);

  std::vector<char> labels(spec.n_functions, 0);
  for (std::size_t i = 0; i < spec.n_vulnerable(); ++i) labels[i] = 1;
  Rng label_rng(seed_from(s + ":labels"));
  label_rng.shuffle(labels);

  std::vector<SyntheticModule> out;
  out.reserve(spec.n_functions + spec.n_background);
  auto add = [&](const std::string& dir, const std::string& name, const detail::FunctionPlan& plan,
                 const std::string& stream, std::optional<bool> vulnerable) {
    Rng content(seed_from(s + ":content:" + stream));
    Rng noise(seed_from(s + ":noise:" + stream));
    auto fn = detail::emit_function(plan, content, noise, spec.min_buffer, spec.max_buffer, spec.difficulty);
    std::string text = detail::raw_module(name + ".c", fn);
    if (!raw) text = detail::canonical_module(text);
    out.push_back({dir + "/" + name + ".ll", plan.name, std::move(text), vulnerable});
  };

  for (std::size_t i = 0; i < spec.n_functions; ++i) {
    const bool vuln = labels[i] != 0;
    const std::string stem = "CWE121_Stack_Based_Buffer_Overflow__synth_" + detail::index4(i);
    detail::FunctionPlan plan{stem + (vuln ? "_bad" : "_goodG2B"), !vuln, true};
    add("cwe121", plan.name, plan, "f" + std::to_string(i), vuln);
  }

  static const char* kOther[] = {"CWE190_Integer_Overflow__synth_", "CWE401_Memory_Leak__synth_",
                                 "CWE476_NULL_Pointer_Dereference__synth_", "helper_synth_"};
  for (std::size_t i = 0; i < spec.n_background; ++i) {
    Rng pick(seed_from(s + ":background:" + std::to_string(i)));
    const std::string stem = std::string(kOther[pick.below(4)]) + detail::index4(i);
    detail::FunctionPlan plan{stem + (pick.bernoulli(0.5) ? "_bad" : "_good"), pick.bernoulli(0.5),
                              pick.bernoulli(0.8)};
    add("background", plan.name, plan, "b" + std::to_string(i), std::nullopt);
  }
  return out;
}

// Writes every module under `dir` plus labels.csv (path,function,label).
inline void write_corpus(const std::string& dir, const std::vector<SyntheticModule>& modules) {
  namespace fs = std::filesystem;
  std::string csv = "path,function,label\n";
  for (const auto& m : modules) {
    fs::path p = fs::path(dir) / m.path;
    fs::create_directories(p.parent_path());
    write_file(p.string(), m.text);
    const char* label = !m.vulnerable ? "unlabeled" : (*m.vulnerable ? "vulnerable" : "clean");
    csv += m.path + "," + m.function + "," + label + "\n";
  }
  fs::create_directories(dir);
  write_file((fs::path(dir) / "labels.csv").string(), csv);
}

}  // namespace irvd::synth
