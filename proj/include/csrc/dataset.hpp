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

// Cloze examples built from relation paths: one example per held-out
// relation, six input slots, plus splitting, numeric encoding and a JSON
// Lines record format.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "csrc/distsem.hpp"
#include "csrc/error.hpp"
#include "csrc/kb_graph.hpp"
#include "csrc/path_search.hpp"

namespace csrc {

inline constexpr std::size_t kSlotCount = 6;
inline constexpr std::size_t kTypeColumns = 3;

enum class SlotKind : std::uint8_t { Entity, Intermediate, Relation, Pad };

inline std::string to_string(SlotKind k) {
  switch (k) {
    case SlotKind::Entity: return "entity";
    case SlotKind::Intermediate: return "intermediate";
    case SlotKind::Relation: return "relation";
    case SlotKind::Pad: return "pad";
  }
  return "?";
}

inline SlotKind parse_slot_kind(std::string_view s) {
  if (s == "entity") return SlotKind::Entity;
  if (s == "intermediate") return SlotKind::Intermediate;
  if (s == "relation") return SlotKind::Relation;
  if (s == "pad") return SlotKind::Pad;
  throw DataError("unknown slot kind '" + std::string(s) + "'");
}

struct Slot {
  SlotKind kind = SlotKind::Pad;
  std::string token;
  bool operator==(const Slot&) const = default;
};

struct ClozeExample {
  std::array<Slot, kSlotCount> slots;
  std::string target;
  std::pair<std::string, std::string> pair;
  int position = 1;    // 1-based index of the held-out relation
  std::string source;  // rendered source path, groups examples for splitting

  std::size_t input_length() const {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const Slot& s) { return s.kind != SlotKind::Pad; }));
  }
  bool operator==(const ClozeExample&) const = default;
};

/// Ordered, closed list of names with dense indices.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names) {
    for (auto& n : names) add(n);
  }

  std::size_t add(const std::string& name) {
    auto [it, inserted] = index_.try_emplace(name, names_.size());
    if (inserted) names_.push_back(name);
    return it->second;
  }
  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index(std::string_view name) const {
    auto i = find(name);
    if (!i) throw DataError("'" + std::string(name) + "' is not in the vocabulary");
    return *i;
  }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool operator==(const Vocabulary& o) const { return names_ == o.names_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> names_;
};

/// Relations occurring on the given paths, ordered by graph relation id.
inline Vocabulary relation_vocabulary(const KnowledgeGraph& g, const std::vector<RelationPath>& paths) {
  std::vector<RelationId> seen;
  for (const auto& p : paths) seen.insert(seen.end(), p.relations.begin(), p.relations.end());
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  Vocabulary v;
  for (auto r : seen) v.add(g.relation_name(r));
  return v;
}

/// One example per relation of each path. Slot layouts (X1 nearest e1):
///   size 1: [e1 e2]              -> R1
///   size 2: [e1 e2 X1]           -> R1,  [e1 e2 X1 R1]       -> R2
///   size 3: [e1 e2 X1]           -> R1,  [e1 e2 X2 X1 R1]    -> R2,
///           [e1 e2 X2 R2 X1 R1]  -> R3
inline std::vector<ClozeExample> build_examples(const KnowledgeGraph& g, const std::vector<RelationPath>& paths) {
  std::vector<ClozeExample> out;
  for (const auto& p : paths) {
    const std::size_t k = p.size();
    if (k < 1 || k > 3) throw UsageError("build_examples: path size must be 1..3, got " + std::to_string(k));
    auto entity = [&](std::size_t i) { return Slot{SlotKind::Entity, g.concept_name(p.concepts[i])}; };
    auto inter = [&](std::size_t i) { return Slot{SlotKind::Intermediate, g.concept_name(p.concepts[i])}; };
    auto rel = [&](std::size_t i) { return Slot{SlotKind::Relation, g.relation_name(p.relations[i - 1])}; };
    const Slot e1 = entity(0), e2 = entity(k);
    std::vector<std::vector<Slot>> layouts;
    if (k == 1) {
      layouts = {{e1, e2}};
    } else if (k == 2) {
      layouts = {{e1, e2, inter(1)}, {e1, e2, inter(1), rel(1)}};
    } else {
      layouts = {{e1, e2, inter(1)}, {e1, e2, inter(2), inter(1), rel(1)}, {e1, e2, inter(2), rel(2), inter(1), rel(1)}};
    }
    const std::string source = format_path_line(g, p);
    for (std::size_t pos = 1; pos <= k; ++pos) {
      ClozeExample ex;
      std::copy(layouts[pos - 1].begin(), layouts[pos - 1].end(), ex.slots.begin());
      ex.target = g.relation_name(p.relations[pos - 1]);
      ex.pair = {e1.token, e2.token};
      ex.position = static_cast<int>(pos);
      ex.source = source;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

struct DatasetSplit {
  std::vector<ClozeExample> train;
  std::vector<ClozeExample> dev;
  std::vector<ClozeExample> test;
  std::uint64_t seed = 0;
};

/// Shuffles source-path groups with a seeded RNG and fills test, then dev,
/// then train. Targets are floor(test_fraction * N) test examples and
/// floor(dev_fraction_of_train * remaining) dev examples; a group always
/// stays in one partition.
inline DatasetSplit split(const std::vector<ClozeExample>& examples, std::uint64_t seed, double test_fraction = 0.25,
                          double dev_fraction_of_train = 0.25) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0) || !(dev_fraction_of_train > 0.0 && dev_fraction_of_train < 1.0)) {
    throw UsageError("split fractions must lie in (0, 1)");
  }
  std::map<std::pair<std::string, std::string>, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto key = std::make_pair(examples[i].pair.first + '\t' + examples[i].pair.second, examples[i].source);
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const double n = static_cast<double>(examples.size());
  const auto test_target = static_cast<std::size_t>(std::floor(test_fraction * n + 1e-9));
  DatasetSplit out;
  out.seed = seed;
  std::size_t g = 0;
  for (; g < groups.size() && out.test.size() < test_target; ++g) {
    for (auto i : groups[g]) out.test.push_back(examples[i]);
  }
  const double remaining = n - static_cast<double>(out.test.size());
  const auto dev_target = static_cast<std::size_t>(std::floor(dev_fraction_of_train * remaining + 1e-9));
  for (; g < groups.size() && out.dev.size() < dev_target; ++g) {
    for (auto i : groups[g]) out.dev.push_back(examples[i]);
  }
  for (; g < groups.size(); ++g) {
    for (auto i : groups[g]) out.train.push_back(examples[i]);
  }
  if (out.train.empty() || out.dev.empty() || out.test.empty()) {
    throw DataError("split: " + std::to_string(examples.size()) + " examples in " + std::to_string(groups.size()) +
                    " groups cannot populate train, dev and test");
  }
  return out;
}

/// Learned vectors for relation tokens (labels are not in word-vector
/// corpora).
struct RelationEmbedder {
  Eigen::MatrixXd vectors;  // |relations| x d

  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }

  /// Uniform(-1/sqrt(d), 1/sqrt(d)) rows.
  static RelationEmbedder random(std::size_t relations, std::size_t dim, std::uint64_t seed) {
    if (relations == 0 || dim == 0) throw UsageError("RelationEmbedder: dimensions must be positive");
    RelationEmbedder e;
    e.vectors.resize(static_cast<Eigen::Index>(relations), static_cast<Eigen::Index>(dim));
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (Eigen::Index r = 0; r < e.vectors.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.vectors.cols(); ++c) e.vectors(r, c) = uniform(rng);
    }
    return e;
  }
};

struct EncodedExample {
  Eigen::MatrixXd features;  // kSlotCount x (d + 3), pad rows zero
  std::array<int, kSlotCount> relation_index{-1, -1, -1, -1, -1, -1};
  std::array<int, kSlotCount> entity_index{-1, -1, -1, -1, -1, -1};
  int label = -1;

  /// Row-major flattening, the feature vector used by the forest.
  std::vector<double> flattened() const {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(features.size()));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
      for (Eigen::Index c = 0; c < features.cols(); ++c) v.push_back(features(r, c));
    }
    return v;
  }
};

/// Rows: concept slots take the table's phrase vector (zero when OOV),
/// relation slots the embedder row; a 3-way one-hot marks entity,
/// intermediate or relation. `entities`, when given, assigns entity_index.
inline EncodedExample encode(const ClozeExample& ex, const EmbeddingTable& table, const RelationEmbedder& relations,
                             const Vocabulary& relation_vocab, const Vocabulary* entities = nullptr) {
  const std::size_t d = table.dim();
  if (relations.dim() != d) {
    throw UsageError("encode: relation embedder dim " + std::to_string(relations.dim()) +
                     " differs from word-vector dim " + std::to_string(d));
  }
  if (relations.size() != relation_vocab.size()) throw UsageError("encode: embedder rows differ from vocabulary size");
  EncodedExample out;
  out.features = Eigen::MatrixXd::Zero(kSlotCount, static_cast<Eigen::Index>(d + kTypeColumns));
  const auto di = static_cast<Eigen::Index>(d);
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    const Slot& slot = ex.slots[s];
    const auto row = static_cast<Eigen::Index>(s);
    switch (slot.kind) {
      case SlotKind::Pad:
        break;
      case SlotKind::Relation: {
        auto r = relation_vocab.index(slot.token);
        out.features.row(row).head(di) = relations.vectors.row(static_cast<Eigen::Index>(r));
        out.features(row, di + 2) = 1.0;
        out.relation_index[s] = static_cast<int>(r);
        break;
      }
      case SlotKind::Entity:
      case SlotKind::Intermediate: {
        if (auto v = table.phrase_vector(slot.token)) {
          for (std::size_t i = 0; i < d; ++i) out.features(row, static_cast<Eigen::Index>(i)) = (*v)[i];
        }
        out.features(row, di + (slot.kind == SlotKind::Entity ? 0 : 1)) = 1.0;
        if (entities) out.entity_index[s] = static_cast<int>(entities->index(slot.token));
        break;
      }
    }
  }
  out.label = static_cast<int>(relation_vocab.index(ex.target));
  return out;
}

/// Concept tokens (entities and intermediates) across examples, sorted.
inline Vocabulary entity_vocabulary(const std::vector<ClozeExample>& examples) {
  std::vector<std::string> tokens;
  for (const auto& ex : examples) {
    for (const auto& s : ex.slots) {
      if (s.kind == SlotKind::Entity || s.kind == SlotKind::Intermediate) tokens.push_back(s.token);
    }
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return Vocabulary(tokens);
}

inline nlohmann::json to_json(const ClozeExample& ex) {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : ex.slots) slots.push_back({{"kind", to_string(s.kind)}, {"token", s.token}});
  return {{"slots", slots},
          {"target", ex.target},
          {"pair", {ex.pair.first, ex.pair.second}},
          {"position", ex.position},
          {"source", ex.source}};
}

inline ClozeExample example_from_json(const nlohmann::json& j) {
  ClozeExample ex;
  const auto& slots = j.at("slots");
  if (!slots.is_array() || slots.size() != kSlotCount) throw DataError("slots must be an array of 6 entries");
  bool padding = false;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    ex.slots[i].kind = parse_slot_kind(slots[i].at("kind").get<std::string>());
    ex.slots[i].token = slots[i].at("token").get<std::string>();
    if (ex.slots[i].kind == SlotKind::Pad) {
      padding = true;
      if (!ex.slots[i].token.empty()) throw DataError("pad slot carries a token");
    } else if (padding) {
      throw DataError("non-pad slot after padding");
    } else if (ex.slots[i].token.empty()) {
      throw DataError("empty token in slot " + std::to_string(i));
    }
  }
  ex.target = j.at("target").get<std::string>();
  if (ex.target.empty()) throw DataError("empty target");
  const auto& pair = j.at("pair");
  if (!pair.is_array() || pair.size() != 2) throw DataError("pair must have two entries");
  ex.pair = {pair[0].get<std::string>(), pair[1].get<std::string>()};
  ex.position = j.at("position").get<int>();
  if (ex.position < 1 || ex.position > 3) throw DataError("position must be 1..3");
  ex.source = j.value("source", std::string{});
  return ex;
}

/// One JSON object per line.
inline void write_examples(std::ostream& out, const std::vector<ClozeExample>& examples) {
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
}

/// Lines starting with '#' are header comments and are skipped.
inline std::vector<ClozeExample> read_examples(std::istream& in) {
  std::vector<ClozeExample> out;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("example record " + std::to_string(record) + ": " + e.what());
    }
    ++record;
  }
  return out;
}

}  // namespace csrc
