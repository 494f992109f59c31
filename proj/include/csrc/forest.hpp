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

// Random forest of axis-aligned Gini trees over flattened encoded examples.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrc/baselines.hpp"
#include "csrc/dataset.hpp"
#include "csrc/error.hpp"

namespace csrc {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;          // 0 = unlimited
  std::size_t feature_subsample = 0;  // 0 = round(sqrt(#features))
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = -1;
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  int predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                         : nodes[i].right);
    }
    return nodes[i].label;
  }
  std::size_t depth() const { return depth_from(0); }

 private:
  std::size_t depth_from(std::size_t i) const {
    if (nodes[i].feature < 0) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[i].left)),
                        depth_from(static_cast<std::size_t>(nodes[i].right)));
  }
};

namespace detail {

using Wide = unsigned __int128;

// Split quality sum_side (sum_c n_c^2) / n_side as an exact fraction.
struct SplitScore {
  std::uint64_t numerator = 0;  // sqL * nR + sqR * nL
  std::uint64_t denominator = 1;  // nL * nR
  bool better_than(const SplitScore& o) const {
    return static_cast<Wide>(numerator) * o.denominator > static_cast<Wide>(o.numerator) * denominator;
  }
};

inline double midpoint(double a, double b) {
  double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<double>>& x, const std::vector<int>& y, std::size_t n_classes,
             const ForestConfig& cfg, std::size_t features_per_split, std::mt19937_64& rng)
      : x_(x), y_(y), n_classes_(n_classes), cfg_(cfg), m_(features_per_split), rng_(rng) {}

  DecisionTree grow(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    build(samples, 0);
    return std::move(tree_);
  }

 private:
  int build(std::vector<std::size_t>& samples, std::size_t depth) {
    std::vector<std::size_t> counts(n_classes_, 0);
    for (auto i : samples) ++counts[static_cast<std::size_t>(y_[i])];
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[node].label = static_cast<int>(argmax_first(counts));

    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || samples.size() < cfg_.min_samples_split || (cfg_.max_depth && depth >= cfg_.max_depth)) return node;

    auto features = pick_features();
    bool found = false;
    SplitScore best;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> column(samples.size());
    std::vector<std::size_t> left(n_classes_);
    for (auto f : features) {
      for (std::size_t k = 0; k < samples.size(); ++k) column[k] = {x_[samples[k]][f], y_[samples[k]]};
      std::sort(column.begin(), column.end());
      std::fill(left.begin(), left.end(), 0);
      std::uint64_t sq_left = 0;
      std::uint64_t sq_right = 0;
      for (auto c : counts) sq_right += static_cast<std::uint64_t>(c) * c;
      const std::uint64_t n = samples.size();
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        const auto c = static_cast<std::size_t>(column[k].second);
        const std::uint64_t l = left[c], r = counts[c] - left[c];
        sq_left += 2 * l + 1;   // (l+1)^2 - l^2
        sq_right -= 2 * r - 1;  // r^2 - (r-1)^2
        ++left[c];
        if (column[k].first == column[k + 1].first) continue;
        const std::uint64_t n_left = k + 1, n_right = n - n_left;
        SplitScore s{sq_left * n_right + sq_right * n_left, n_left * n_right};
        if (!found || s.better_than(best)) {
          found = true;
          best = s;
          best_feature = static_cast<int>(f);
          best_threshold = midpoint(column[k].first, column[k + 1].first);
        }
      }
    }
    if (!found) return node;

    std::vector<std::size_t> lo, hi;
    for (auto i : samples) {
      (x_[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? lo : hi).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree_.nodes[node].feature = best_feature;
    tree_.nodes[node].threshold = best_threshold;
    const int l = build(lo, depth + 1);
    const int r = build(hi, depth + 1);
    tree_.nodes[node].left = l;
    tree_.nodes[node].right = r;
    return node;
  }

  // m distinct feature indices, ascending.
  std::vector<std::size_t> pick_features() {
    const std::size_t total = x_.front().size();
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    if (m_ >= total) return idx;
    for (std::size_t i = 0; i < m_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(idx[i], idx[pick(rng_)]);
    }
    idx.resize(m_);
    std::sort(idx.begin(), idx.end());
    return idx;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  std::size_t n_classes_;
  const ForestConfig& cfg_;
  std::size_t m_;
  std::mt19937_64& rng_;
  DecisionTree tree_;
};

}  // namespace detail

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  ForestConfig config;
  std::uint64_t seed = 0;

  /// Majority vote; ties go to the smaller class index.
  int predict(std::span<const double> x) const {
    if (x.size() != n_features) throw UsageError("forest: feature count mismatch");
    std::vector<std::size_t> votes(n_classes, 0);
    for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(x))];
    return static_cast<int>(argmax_first(votes));
  }
};

/// Grows `config.n_trees` trees. Tree t draws from its own RNG seeded by
/// (seed, t), so the forest does not depend on growth order.
inline ForestModel train_forest(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                std::size_t n_classes, const ForestConfig& config, std::uint64_t seed) {
  if (x.empty() || x.size() != y.size()) throw UsageError("train_forest: empty or mismatched training data");
  if (config.n_trees == 0) throw UsageError("train_forest: n_trees must be positive");
  const std::size_t n_features = x.front().size();
  for (const auto& row : x) {
    if (row.size() != n_features) throw DataError("train_forest: ragged feature rows");
  }
  std::vector<bool> present(n_classes, false);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw DataError("train_forest: label out of range");
    present[static_cast<std::size_t>(label)] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw DataError("train_forest: need at least two classes in the training data");
  }
  std::size_t m = config.feature_subsample;
  if (m == 0) m = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n_features))));
  m = std::clamp<std::size_t>(m, 1, n_features);

  ForestModel model;
  model.n_classes = n_classes;
  model.n_features = n_features;
  model.config = config;
  model.seed = seed;
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> samples(x.size());
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
      for (auto& s : samples) s = pick(rng);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    detail::TreeGrower grower(x, y, n_classes, config, m, rng);
    model.trees.push_back(grower.grow(std::move(samples)));
  }
  return model;
}

inline ForestModel train_forest(const std::vector<EncodedExample>& train, std::size_t n_classes,
                                const ForestConfig& config, std::uint64_t seed) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& e : train) {
    x.push_back(e.flattened());
    y.push_back(e.label);
  }
  return train_forest(x, y, n_classes, config, seed);
}

inline nlohmann::json to_json(const ForestModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    trees.push_back(std::move(nodes));
  }
  return {{"format", "csrc-forest"},
          {"version", kCountModelVersion},
          {"n_classes", m.n_classes},
          {"n_features", m.n_features},
          {"seed", m.seed},
          {"config",
           {{"n_trees", m.config.n_trees},
            {"max_depth", m.config.max_depth},
            {"feature_subsample", m.config.feature_subsample},
            {"min_samples_split", m.config.min_samples_split},
            {"bootstrap", m.config.bootstrap}}},
          {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
  check_document(j, "csrc-forest");
  ForestModel m;
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& c = j.at("config");
  m.config.n_trees = c.at("n_trees").get<std::size_t>();
  m.config.max_depth = c.at("max_depth").get<std::size_t>();
  m.config.feature_subsample = c.at("feature_subsample").get<std::size_t>();
  m.config.min_samples_split = c.at("min_samples_split").get<std::size_t>();
  m.config.bootstrap = c.at("bootstrap").get<bool>();
  for (const auto& t : j.at("trees")) {
    DecisionTree tree;
    for (const auto& n : t) {
      tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                            n.at(4).get<int>()});
    }
    if (tree.nodes.empty()) throw DataError("forest model contains an empty tree");
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace csrc
