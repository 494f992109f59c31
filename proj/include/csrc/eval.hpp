// Copyright 2026 The csrc Authors.
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

// Confusion-matrix scoring: accuracy, macro precision/recall/F1 over the
// full relation vocabulary, per-relation hit rates and top confusions.

#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrc/dataset.hpp"
#include "csrc/error.hpp"

namespace csrc {

/// Rows are gold classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : n_(classes), cells_(classes * classes, 0) {}

  void add(std::size_t gold, std::size_t predicted, std::size_t count = 1) {
    if (gold >= n_ || predicted >= n_) {
      throw DataError("confusion matrix: class index outside vocabulary of " + std::to_string(n_));
    }
    cells_[gold * n_ + predicted] += count;
  }

  std::size_t classes() const { return n_; }
  std::size_t at(std::size_t gold, std::size_t predicted) const { return cells_.at(gold * n_ + predicted); }
  std::size_t row_sum(std::size_t gold) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += at(gold, p);
    return s;
  }
  std::size_t column_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (std::size_t g = 0; g < n_; ++g) s += at(g, predicted);
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t c = 0; c < n_; ++c) s += at(c, c);
    return s;
  }
  std::size_t total() const {
    std::size_t s = 0;
    for (auto c : cells_) s += c;
    return s;
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> cells_;
};

struct RelationStats {
  std::size_t relation = 0;
  std::size_t correct = 0;
  double rate = 0.0;
};

struct Confusion {
  std::size_t predicted = 0;
  std::size_t count = 0;
  bool operator==(const Confusion&) const = default;
};

struct RelationRow {
  std::size_t relation = 0;
  std::size_t correct = 0;
  double rate = 0.0;
  std::vector<Confusion> wrong;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::size_t total = 0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  std::vector<RelationRow> per_relation;
};

/// Precision, recall and F1 of one class; empty denominators give 0.
inline ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  ClassMetrics m;
  const double hit = static_cast<double>(cm.at(c, c));
  if (auto col = cm.column_sum(c)) m.precision = hit / static_cast<double>(col);
  if (auto row = cm.row_sum(c)) m.recall = hit / static_cast<double>(row);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

/// Correct count and rate for every relation that occurs in the gold data.
inline std::vector<RelationStats> per_relation_report(const ConfusionMatrix& cm) {
  std::vector<RelationStats> rows;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto row = cm.row_sum(c);
    if (row == 0) continue;
    rows.push_back({c, cm.at(c, c), static_cast<double>(cm.at(c, c)) / static_cast<double>(row)});
  }
  return rows;
}

/// Largest off-diagonal cells of one gold row, descending, ties by smaller
/// class index; zero cells are never listed.
inline std::vector<Confusion> top_confusions(const ConfusionMatrix& cm, std::size_t gold, std::size_t k = 3) {
  std::vector<Confusion> wrong;
  for (std::size_t p = 0; p < cm.classes(); ++p) {
    if (p != gold && cm.at(gold, p) > 0) wrong.push_back({p, cm.at(gold, p)});
  }
  std::stable_sort(wrong.begin(), wrong.end(), [](const Confusion& a, const Confusion& b) { return a.count > b.count; });
  if (wrong.size() > k) wrong.resize(k);
  return wrong;
}

inline EvalReport summarize(const ConfusionMatrix& cm, std::size_t top_k = 3) {
  EvalReport r;
  r.total = cm.total();
  if (r.total == 0) throw UsageError("evaluate: empty test set");
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(r.total);
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    r.per_class.push_back(class_metrics(cm, c));
    r.macro_precision += r.per_class.back().precision;
    r.macro_recall += r.per_class.back().recall;
    r.macro_f1 += r.per_class.back().f1;
  }
  const double n = static_cast<double>(cm.classes());
  r.macro_precision /= n;
  r.macro_recall /= n;
  r.macro_f1 /= n;
  for (const auto& s : per_relation_report(cm)) {
    r.per_relation.push_back({s.relation, s.correct, s.rate, top_confusions(cm, s.relation, top_k)});
  }
  return r;
}

/// Scores `predict(example) -> class index` on the test examples.
template <typename Predictor>
std::pair<EvalReport, ConfusionMatrix> evaluate(Predictor&& predict, const std::vector<ClozeExample>& test,
                                                const Vocabulary& vocab) {
  if (test.empty()) throw UsageError("evaluate: empty test set");
  ConfusionMatrix cm(vocab.size());
  for (const auto& ex : test) {
    const auto pred = static_cast<long long>(predict(ex));
    if (pred < 0 || static_cast<std::size_t>(pred) >= vocab.size()) {
      throw DataError("evaluate: prediction " + std::to_string(pred) + " outside the vocabulary");
    }
    cm.add(vocab.index(ex.target), static_cast<std::size_t>(pred));
  }
  return {summarize(cm), cm};
}

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string rule = "+";
  for (auto w : width) rule += std::string(w + 2, '-') + "+";
  std::ostringstream out;
  out << rule << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << '|';
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < rows[r].size() ? rows[r][i] : "";
      out << ' ' << cell << std::string(width[i] - cell.size(), ' ') << " |";
    }
    out << '\n';
    if (r == 0) out << rule << '\n';
  }
  out << rule << '\n';
  return out.str();
}

}  // namespace detail

/// Method | Recall | Precision | F1 Score | Accuracy
inline std::string render_metric_table(const std::vector<std::pair<std::string, EvalReport>>& methods) {
  std::vector<std::vector<std::string>> rows{{"Method", "Recall", "Precision", "F1 Score", "Accuracy"}};
  for (const auto& [name, r] : methods) {
    rows.push_back({name, detail::fixed(r.macro_recall), detail::fixed(r.macro_precision), detail::fixed(r.macro_f1),
                    detail::fixed(r.accuracy)});
  }
  return detail::render_rows(rows);
}

/// Relation | # Correct Predicted | Correct Predicted Rate, by descending rate.
inline std::string render_relation_table(const EvalReport& r, const Vocabulary& vocab) {
  auto sorted = r.per_relation;
  std::stable_sort(sorted.begin(), sorted.end(), [](const RelationRow& a, const RelationRow& b) { return a.rate > b.rate; });
  std::vector<std::vector<std::string>> rows{{"Relation", "# Correct Predicted", "Correct Predicted Rate"}};
  for (const auto& row : sorted) rows.push_back({vocab.name(row.relation), std::to_string(row.correct), detail::fixed(row.rate, 3)});
  return detail::render_rows(rows);
}

/// Relation | # Correct | Rate | Wrong Relation k | # False Predicted k ...
inline std::string render_confusion_table(const EvalReport& r, const Vocabulary& vocab, std::size_t k = 3) {
  auto sorted = r.per_relation;
  std::stable_sort(sorted.begin(), sorted.end(), [](const RelationRow& a, const RelationRow& b) { return a.rate > b.rate; });
  std::vector<std::string> head{"Relation", "# Correct Predicted", "Rate"};
  for (std::size_t i = 1; i <= k; ++i) {
    head.push_back("Wrong Relation " + std::to_string(i));
    head.push_back("# False Predicted " + std::to_string(i));
  }
  std::vector<std::vector<std::string>> rows{head};
  for (const auto& row : sorted) {
    std::vector<std::string> cells{vocab.name(row.relation), std::to_string(row.correct), detail::fixed(row.rate, 3)};
    for (std::size_t i = 0; i < k; ++i) {
      if (i < row.wrong.size()) {
        cells.push_back(vocab.name(row.wrong[i].predicted));
        cells.push_back(std::to_string(row.wrong[i].count));
      } else {
        cells.push_back("");
        cells.push_back("");
      }
    }
    rows.push_back(std::move(cells));
  }
  return detail::render_rows(rows);
}

inline nlohmann::json to_json(const EvalReport& r, const ConfusionMatrix& cm, const Vocabulary& vocab) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& row : r.per_relation) {
    nlohmann::json wrong = nlohmann::json::array();
    for (const auto& w : row.wrong) wrong.push_back({{"relation", vocab.name(w.predicted)}, {"count", w.count}});
    per.push_back({{"relation", vocab.name(row.relation)}, {"correct", row.correct}, {"rate", row.rate}, {"wrong", wrong}});
  }
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t g = 0; g < cm.classes(); ++g) {
    nlohmann::json line = nlohmann::json::array();
    for (std::size_t p = 0; p < cm.classes(); ++p) line.push_back(cm.at(g, p));
    matrix.push_back(std::move(line));
  }
  return {{"total", r.total},
          {"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"relations", vocab.names()},
          {"per_relation", per},
          {"confusion", matrix}};
}

/// Rebuilds a report from the document written by to_json.
inline std::pair<EvalReport, ConfusionMatrix> report_from_json(const nlohmann::json& j) {
  const auto& matrix = j.at("confusion");
  ConfusionMatrix cm(matrix.size());
  for (std::size_t g = 0; g < matrix.size(); ++g) {
    if (matrix[g].size() != matrix.size()) throw DataError("report: confusion matrix is not square");
    for (std::size_t p = 0; p < matrix.size(); ++p) cm.add(g, p, matrix[g][p].get<std::size_t>());
  }
  return {summarize(cm), cm};
}

}  // namespace csrc
