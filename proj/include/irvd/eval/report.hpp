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

// Report tables (Markdown and CSV). Percentages carry one decimal, losses
// four. Rows taken from outside sources are rendered verbatim with their
// source tag and never recomputed.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irvd/common.hpp"
#include "irvd/corpus/manifest.hpp"
#include "irvd/eval/metrics.hpp"

namespace irvd::eval {

struct ReportRow {
  std::string configuration;
  std::string source;  // empty for rows computed by this tool
  bool na = false;
  int epoch = 0;
  double loss = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

inline ReportRow na_row(std::string configuration, std::string source = {}) {
  ReportRow r;
  r.configuration = std::move(configuration);
  r.source = std::move(source);
  r.na = true;
  return r;
}

inline ReportRow row_from_record(std::string configuration, const MetricsRecord& m, std::string source = {}) {
  ReportRow r;
  r.configuration = std::move(configuration);
  r.source = std::move(source);
  r.epoch = m.epoch;
  r.loss = m.loss;
  r.accuracy = m.accuracy;
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  return r;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string pct(double v) { return fmt("%.1f%%", v * 100.0); }

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

inline std::string md_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = "|";
  for (const auto& h : header) out += " " + md_escape(h) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? "---|" : "---:|";
  out += "\n";
  for (const auto& r : rows) {
    out += "|";
    for (const auto& c : r) out += " " + md_escape(c) + " |";
    out += "\n";
  }
  return out;
}

inline std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
    out += "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

// RFC 4180-style CSV: quoted fields may contain commas, quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorKind::kFormat, "unterminated quoted CSV field");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Accepts "0.925", "92.5%" or "92.5" (values above 1 are percentages).
inline double parse_fraction(const std::string& s) {
  std::string t = s;
  bool percent = !t.empty() && t.back() == '%';
  if (percent) t.pop_back();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kFormat, "not a number: '" + s + "'");
  }
  if (used != t.size()) throw Error(ErrorKind::kFormat, "not a number: '" + s + "'");
  if (percent || v > 1.0) v /= 100.0;
  return v;
}

inline std::vector<std::string> row_cells(const ReportRow& r) {
  if (r.na) return {r.configuration, "NA", "NA", "NA", "NA", "NA", "NA"};
  return {r.configuration, std::to_string(r.epoch), fmt("%.4f", r.loss), pct(r.accuracy),
          pct(r.precision),  pct(r.recall),          pct(r.f1)};
}

}  // namespace detail

// Reads external result rows. Required columns: model, epoch, loss,
// accuracy, precision, recall, f1, source. "NA" in epoch marks an NA row.
inline std::vector<ReportRow> parse_external_rows(const std::string& csv_text) {
  auto rows = detail::parse_csv(csv_text);
  if (rows.empty()) return {};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
  for (const char* need : {"model", "epoch", "loss", "accuracy", "precision", "recall", "f1", "source"}) {
    if (!col.count(need)) throw Error(ErrorKind::kFormat, std::string("external rows CSV lacks column '") + need + "'");
  }
  std::vector<ReportRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != rows[0].size()) {
      throw Error(ErrorKind::kFormat, "external rows CSV line " + std::to_string(r + 1) + " has the wrong cell count");
    }
    const std::string& source = cells[col["source"]];
    if (source.empty()) throw Error(ErrorKind::kFormat, "external row without a source tag");
    if (cells[col["epoch"]] == "NA") {
      out.push_back(na_row(cells[col["model"]], source));
      continue;
    }
    ReportRow row;
    row.configuration = cells[col["model"]];
    row.source = source;
    row.epoch = std::stoi(cells[col["epoch"]]);
    row.loss = std::stod(cells[col["loss"]]);
    row.accuracy = detail::parse_fraction(cells[col["accuracy"]]);
    row.precision = detail::parse_fraction(cells[col["precision"]]);
    row.recall = detail::parse_fraction(cells[col["recall"]]);
    row.f1 = detail::parse_fraction(cells[col["f1"]]);
    out.push_back(row);
  }
  return out;
}

// Internal rows followed by external rows, sorted by accuracy descending;
// NA rows go last. The sort is stable, so equal accuracies keep input order.
inline std::vector<ReportRow> comparison_rows(std::vector<ReportRow> internal, const std::vector<ReportRow>& external) {
  internal.insert(internal.end(), external.begin(), external.end());
  std::stable_sort(internal.begin(), internal.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.na != b.na) return !a.na;
    return a.accuracy > b.accuracy;
  });
  return internal;
}

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string markdown() const {
    std::string out = title.empty() ? "" : "### " + title + "\n\n";
    return out + detail::md_table(header, rows);
  }
  std::string csv() const { return detail::csv_table(header, rows); }
};

inline const std::vector<std::string>& metric_header() {
  static const std::vector<std::string> h = {"Epoch", "Loss", "Accuracy", "Precision", "Recall", "F1-Score"};
  return h;
}

// One row per configuration in the given order (optimizer grid layout).
inline Table grid_table(const std::string& title, const std::vector<ReportRow>& rows) {
  Table t{title, {"Optimizer"}, {}};
  t.header.insert(t.header.end(), metric_header().begin(), metric_header().end());
  for (const auto& r : rows) t.rows.push_back(detail::row_cells(r));
  return t;
}

inline Table comparison_table(const std::string& title, const std::vector<ReportRow>& internal,
                              const std::vector<ReportRow>& external) {
  Table t{title, {"Model"}, {}};
  t.header.insert(t.header.end(), metric_header().begin(), metric_header().end());
  t.header.push_back("Source");
  for (const auto& r : comparison_rows(internal, external)) {
    auto cells = detail::row_cells(r);
    cells.push_back(r.source.empty() ? "this run" : r.source);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// Lowest validation losses with their steps, best first.
struct LossPoint {
  long step = 0;
  double train_loss = 0;
  double val_loss = 0;
};

inline Table best_loss_table(const std::string& title, std::vector<LossPoint> points, std::size_t top = 5) {
  std::stable_sort(points.begin(), points.end(),
                   [](const LossPoint& a, const LossPoint& b) { return a.val_loss < b.val_loss; });
  if (points.size() > top) points.resize(top);
  Table t{title, {"Step", "Training Set", "Validation Set"}, {}};
  for (const auto& p : points) {
    t.rows.push_back({std::to_string(p.step), detail::fmt("%.6f", p.train_loss), detail::fmt("%.6f", p.val_loss)});
  }
  return t;
}

// Dataset size at each filtering stage, for the embedding corpus and the
// labeled classifier dataset.
inline Table corpus_counts_table(const std::string& title, const corpus::CorpusManifest& embedder,
                                 const corpus::CorpusManifest& classifier, std::size_t max_tokens) {
  auto stat = [](const corpus::CorpusManifest& m, const std::string& stage, const std::string& key) -> std::string {
    auto it = m.stats.find(stage);
    if (it == m.stats.end()) return "-";
    auto jt = it->second.find(key);
    return jt == it->second.end() ? "0" : std::to_string(jt->second);
  };
  std::string emb_total = "-";
  if (embedder.stats.count("input")) {
    std::size_t in = embedder.stats.at("input").count("all") ? embedder.stats.at("input").at("all") : 0;
    std::size_t ex = embedder.stats.count("excluded") && embedder.stats.at("excluded").count("all")
                         ? embedder.stats.at("excluded").at("all")
                         : 0;
    emb_total = std::to_string(in - ex);
  }
  Table t{title, {"Stage", "Embedding Corpus", "Classifier Clean", "Classifier Vulnerable", "Classifier Total"}, {}};
  t.rows.push_back({"Total Functions", emb_total, stat(classifier, "input", "clean"),
                    stat(classifier, "input", "vulnerable"), stat(classifier, "input", "all")});
  t.rows.push_back({"Post Duplicate Removal", std::to_string(embedder.members.size()),
                    stat(classifier, "post_dedupe", "clean"), stat(classifier, "post_dedupe", "vulnerable"),
                    stat(classifier, "post_dedupe", "all")});
  t.rows.push_back({"Post Removal of Functions More than " + std::to_string(max_tokens) + " Tokens", "-",
                    stat(classifier, "post_length_filter", "clean"),
                    stat(classifier, "post_length_filter", "vulnerable"),
                    stat(classifier, "post_length_filter", "all")});
  return t;
}

}  // namespace irvd::eval
