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

// Test helpers: small graph builders and independent reference
// implementations that the library results are compared against.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <cmath>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "csrc/csrc.hpp"

namespace csrc::testing {

inline KnowledgeGraph graph_from(const std::string& tsv) {
  std::istringstream in(tsv);
  return load_edges(in);
}

struct RawEdge {
  std::string relation, start, end;
  auto operator<=>(const RawEdge&) const = default;
};

// Random multigraph text over nodes n0..n{nodes-1} and relations r0..r3.
inline std::vector<RawEdge> random_edges(std::mt19937_64& rng, std::size_t nodes, std::size_t edges) {
  std::uniform_int_distribution<std::size_t> node(0, nodes - 1);
  std::uniform_int_distribution<int> rel(0, 3);
  std::vector<RawEdge> out;
  for (std::size_t i = 0; i < edges; ++i) {
    out.push_back({"r" + std::to_string(rel(rng)), "n" + std::to_string(node(rng)), "n" + std::to_string(node(rng))});
  }
  return out;
}

inline std::string to_tsv(const std::vector<RawEdge>& edges) {
  std::string s;
  for (const auto& e : edges) s += e.relation + "\t" + e.start + "\t" + e.end + "\n";
  return s;
}

// Brute-force DFS straight over the raw edge list: every walk of at most
// max_len steps from e1 that reaches e2 at its last step without repeating a
// node. Returned as rendered "a/r/b..." TAB "f,r" strings.
inline std::set<std::string> brute_force_paths(const std::vector<RawEdge>& raw, const std::string& e1,
                                               const std::string& e2, std::size_t max_len, bool directed) {
  std::set<RawEdge> edges(raw.begin(), raw.end());
  std::set<std::string> found;
  std::vector<std::string> nodes{e1}, rels, dirs;
  auto dfs = [&](auto& self) -> void {
    const std::string here = nodes.back();
    if (here == e2 && !rels.empty()) {
      std::string text = nodes[0], d;
      for (std::size_t i = 0; i < rels.size(); ++i) {
        text += "/" + rels[i] + "/" + nodes[i + 1];
        d += (i ? "," : "") + dirs[i];
      }
      found.insert(text + "\t" + d);
      return;
    }
    if (rels.size() == max_len) return;
    for (const auto& e : edges) {
      for (int way = 0; way < (directed ? 1 : 2); ++way) {
        const std::string& from = way == 0 ? e.start : e.end;
        const std::string& to = way == 0 ? e.end : e.start;
        if (from != here || std::find(nodes.begin(), nodes.end(), to) != nodes.end()) continue;
        nodes.push_back(to);
        rels.push_back(e.relation);
        dirs.push_back(way == 0 ? "f" : "r");
        self(self);
        nodes.pop_back();
        rels.pop_back();
        dirs.pop_back();
      }
    }
  };
  dfs(dfs);
  return found;
}

inline std::set<std::string> rendered(const KnowledgeGraph& g, const std::vector<RelationPath>& paths) {
  std::set<std::string> out;
  for (const auto& p : paths) out.insert(format_path_line(g, p));
  return out;
}

inline ClozeExample example(std::vector<std::pair<SlotKind, std::string>> slots, std::string target) {
  ClozeExample ex;
  for (std::size_t i = 0; i < slots.size(); ++i) ex.slots[i] = {slots[i].first, slots[i].second};
  ex.target = std::move(target);
  ex.position = 1;
  return ex;
}

// Exact fraction p/q with q > 0, compared by cross multiplication.
struct Fraction {
  std::int64_t p = 0, q = 1;
  Fraction operator+(const Fraction& o) const { return {p * o.q + o.p * q, q * o.q}; }
  bool operator>(const Fraction& o) const {
    return static_cast<__int128>(p) * o.q > static_cast<__int128>(o.p) * q;
  }
};

// Reference CART: exhaustive search over every feature and every midpoint
// between distinct sorted values, recounting classes from scratch for each
// candidate. Score = sum over sides of (sum_c n_c^2) / n_side, maximized;
// the first strictly better (feature, threshold) wins.
class ReferenceTree {
 public:
  ReferenceTree(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int classes)
      : x_(x), y_(y), classes_(classes) {
    std::vector<std::size_t> all(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    root_ = build(all);
  }

  int predict(const std::vector<double>& v) const {
    int n = root_;
    while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes_[static_cast<std::size_t>(n)];
      n = v[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(n)].label;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0;
    int left = -1, right = -1, label = 0;
  };

  Fraction side_score(const std::vector<std::size_t>& side) const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(classes_), 0);
    for (auto i : side) ++counts[static_cast<std::size_t>(y_[i])];
    std::int64_t sq = 0;
    for (auto c : counts) sq += c * c;
    return {sq, static_cast<std::int64_t>(side.size())};
  }

  int build(const std::vector<std::size_t>& rows) {
    std::vector<int> counts(static_cast<std::size_t>(classes_), 0);
    for (auto i : rows) ++counts[static_cast<std::size_t>(y_[i])];
    Node node;
    for (int c = 1; c < classes_; ++c) {
      if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(node.label)]) node.label = c;
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    int present = 0;
    for (int c : counts) present += c > 0;
    if (present <= 1 || rows.size() < 2) return id;

    bool found = false;
    Fraction best;
    int best_f = -1;
    double best_t = 0;
    for (std::size_t f = 0; f < x_.front().size(); ++f) {
      std::set<double> values;
      for (auto i : rows) values.insert(x_[i][f]);
      for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
        const double lo = *it, hi = *std::next(it);
        double t = lo + (hi - lo) / 2;
        if (!(t < hi)) t = lo;
        std::vector<std::size_t> l, r;
        for (auto i : rows) (x_[i][f] <= t ? l : r).push_back(i);
        Fraction s = side_score(l) + side_score(r);
        if (!found || s > best) {
          found = true;
          best = s;
          best_f = static_cast<int>(f);
          best_t = t;
        }
      }
    }
    if (!found) return id;
    std::vector<std::size_t> l, r;
    for (auto i : rows) (x_[i][static_cast<std::size_t>(best_f)] <= best_t ? l : r).push_back(i);
    const int left = build(l);
    const int right = build(r);
    nodes_[static_cast<std::size_t>(id)].feature = best_f;
    nodes_[static_cast<std::size_t>(id)].threshold = best_t;
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  int classes_;
  int root_ = 0;
  std::vector<Node> nodes_;
};

// Encoded sequences of 1..6 random tokens whose label is a fixed function
// (token id mod classes) of the last non-pad token. Rows are token vectors
// of width d followed by the 3-column type flag.
inline std::vector<EncodedExample> last_token_task(std::size_t n, std::size_t classes, std::size_t d,
                                                   std::uint64_t seed, std::size_t tokens = 10) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(tokens), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) vectors(r, c) = normal(rng);
  }
  std::uniform_int_distribution<std::size_t> token(0, tokens - 1), length(1, kSlotCount);
  std::vector<EncodedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    EncodedExample ex;
    ex.features = Eigen::MatrixXd::Zero(kSlotCount, static_cast<Eigen::Index>(d + kTypeColumns));
    const std::size_t len = length(rng);
    std::size_t last = 0;
    for (std::size_t t = 0; t < len; ++t) {
      last = token(rng);
      const auto row = static_cast<Eigen::Index>(t);
      ex.features.row(row).head(static_cast<Eigen::Index>(d)) = vectors.row(static_cast<Eigen::Index>(last));
      ex.features(row, static_cast<Eigen::Index>(d + (t < 2 ? 0 : 1))) = 1.0;
    }
    ex.label = static_cast<int>(last % classes);
    out.push_back(std::move(ex));
  }
  return out;
}

// Random encoded batch for a model whose input rows are embedding_dim token
// columns plus 3 type columns. Some rows are relation slots, and entity rows
// carry entity indices when the model trains entity embeddings.
inline std::vector<EncodedExample> random_batch(const ModelConfig& c, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> kind(0, 3), label(0, static_cast<int>(c.classes) - 1);
  std::uniform_int_distribution<std::size_t> length(1, kSlotCount);
  const auto E = static_cast<Eigen::Index>(c.embedding_dim);
  std::vector<EncodedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    EncodedExample ex;
    ex.features = Eigen::MatrixXd::Zero(kSlotCount, static_cast<Eigen::Index>(c.input_dim));
    const std::size_t len = length(rng);
    for (std::size_t t = 0; t < len; ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      for (Eigen::Index k = 0; k < E; ++k) ex.features(row, k) = normal(rng);
      const int k = kind(rng);
      if (k == 0) {
        ex.features(row, E + 2) = 1.0;
        ex.relation_index[t] = label(rng);
      } else {
        ex.features(row, E + (k == 1 ? 0 : 1)) = 1.0;
        if (c.train_entities) {
          ex.entity_index[t] = static_cast<int>(rng() % c.entity_count);
        }
      }
    }
    ex.label = label(rng);
    out.push_back(std::move(ex));
  }
  return out;
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
};

// Analytic (double) gradients against central differences of the loss
// evaluated in long double. Relative error |a - n| / max(|a|, |n|, floor);
// the floor keeps gradients that vanish analytically from dividing
// round-off by zero.
inline GradientCheck gradient_check(const LstmClassifier<double>& model, std::span<const EncodedExample* const> batch,
                                    Mode mode, std::uint64_t seed, long double step = 1e-5L,
                                    double floor = 1e-7) {
  std::vector<Eigen::MatrixXd> grads;
  model.loss_and_gradients(batch, grads, mode, seed);
  auto wide = model.cast<long double>();
  GradientCheck result;
  for (std::size_t k = 0; k < wide.tensors.size(); ++k) {
    auto& t = wide.tensors[k];
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const long double saved = t.data()[i];
      t.data()[i] = saved + step;
      const long double up = wide.loss(batch, mode, seed);
      t.data()[i] = saved - step;
      const long double down = wide.loss(batch, mode, seed);
      t.data()[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2 * step));
      const double analytic = grads[k].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
      ++result.parameters;
    }
  }
  return result;
}

inline std::vector<const EncodedExample*> pointers(const std::vector<EncodedExample>& xs) {
  std::vector<const EncodedExample*> out;
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

// 41-class test set of 5000 examples whose modal class 0 holds 803, scored
// by a predictor that always answers the modal class.
inline ConfusionMatrix modal_predictor_matrix() {
  ConfusionMatrix cm(41);
  cm.add(0, 0, 803);
  std::size_t left = 5000 - 803;
  for (std::size_t c = 1; c < 41; ++c) {
    const std::size_t n = c == 40 ? left : left / (41 - c) - (c % 3);
    cm.add(c, 0, n);
    left -= n;
  }
  return cm;
}

// Every stage of the pipeline with every model, as the CLI would run them.
inline void run_pipeline(const PipelineConfig& config, std::ostream& log) {
  Pipeline p(config, log);
  p.ingest();
  p.paths();
  p.filter();
  p.build_dataset();
  for (const auto& m : model_names()) p.train(m);
  p.evaluate({});
  p.report();
}

// Relative path -> file bytes for everything under `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    out[std::filesystem::relative(e.path(), root).generic_string()] = bytes.str();
  }
  return out;
}

}  // namespace csrc::testing
