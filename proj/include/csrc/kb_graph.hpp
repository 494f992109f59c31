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

// Interned, immutable view of a ConceptNet-style graph of typed binary
// relations. Concepts and relation labels are normalized and receive dense
// ids in order of first appearance, so identical input gives identical ids.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "csrc/error.hpp"

namespace csrc {

struct ConceptId {
  std::uint32_t value = 0;
  auto operator<=>(const ConceptId&) const = default;
};

struct RelationId {
  std::uint32_t value = 0;
  auto operator<=>(const RelationId&) const = default;
};

/// Lowercases ASCII, strips surrounding whitespace and joins internal
/// whitespace runs with a single underscore. Throws UsageError when nothing
/// but whitespace remains.
inline std::string normalize(std::string_view surface) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::string out;
  out.reserve(surface.size());
  bool pending_gap = false;
  for (char c : surface) {
    if (is_space(c)) {
      pending_gap = !out.empty();
      continue;
    }
    if (pending_gap) {
      out.push_back('_');
      pending_gap = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (out.empty()) throw UsageError("normalize: empty or all-whitespace surface form");
  return out;
}

struct Edge {
  RelationId relation;
  ConceptId start;
  ConceptId end;
  double weight = 1.0;
};

enum class NeighborMode { Outgoing, Incoming, Both };

struct Neighbor {
  RelationId relation;
  ConceptId node;
  Direction direction;
  auto operator<=>(const Neighbor&) const = default;
};

// Dense string <-> id table.
class Interner {
 public:
  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = index_.try_emplace(s, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(s);
    return it->second;
  }
  std::optional<std::uint32_t> find(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> names_;
};

class KnowledgeGraph {
 public:
  std::size_t concept_count() const { return concepts_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_.at(i); }

  const std::string& concept_name(ConceptId c) const { return concepts_.name(c.value); }
  const std::string& relation_name(RelationId r) const { return relations_.name(r.value); }
  const std::vector<std::string>& relation_names() const { return relations_.names(); }
  const std::vector<std::string>& concept_names() const { return concepts_.names(); }

  /// Looks up a concept by surface form (normalized first).
  std::optional<ConceptId> find_concept(std::string_view surface) const {
    std::string key;
    try {
      key = normalize(surface);
    } catch (const UsageError&) {
      return std::nullopt;
    }
    auto id = concepts_.find(key);
    if (!id) return std::nullopt;
    return ConceptId{*id};
  }

  std::optional<RelationId> find_relation(std::string_view surface) const {
    std::string key;
    try {
      key = normalize(surface);
    } catch (const UsageError&) {
      return std::nullopt;
    }
    auto id = relations_.find(key);
    if (!id) return std::nullopt;
    return RelationId{*id};
  }

  ConceptId concept_id(std::string_view surface) const {
    auto id = find_concept(surface);
    if (!id) throw UsageError("unknown concept '" + std::string(surface) + "'");
    return *id;
  }

  RelationId relation_id(std::string_view surface) const {
    auto id = find_relation(surface);
    if (!id) throw UsageError("unknown relation '" + std::string(surface) + "'");
    return *id;
  }

  bool contains(ConceptId c) const { return c.value < concepts_.size(); }

  /// Edge indices leaving / entering a concept, in edge-id order.
  const std::vector<std::uint32_t>& outgoing(ConceptId c) const { return out_.at(c.value); }
  const std::vector<std::uint32_t>& incoming(ConceptId c) const { return in_.at(c.value); }

  /// Adjacent concepts sorted by (relation, neighbor, direction).
  std::vector<Neighbor> neighbors(ConceptId c, NeighborMode mode) const {
    if (!contains(c)) throw UsageError("neighbors: unknown concept id " + std::to_string(c.value));
    std::vector<Neighbor> result;
    if (mode != NeighborMode::Incoming) {
      for (auto e : out_[c.value]) result.push_back({edges_[e].relation, edges_[e].end, Direction::Forward});
    }
    if (mode != NeighborMode::Outgoing) {
      for (auto e : in_[c.value]) result.push_back({edges_[e].relation, edges_[e].start, Direction::Reverse});
    }
    std::sort(result.begin(), result.end());
    return result;
  }

  bool has_edge(RelationId r, ConceptId start, ConceptId end) const {
    return edge_index_.count(std::make_tuple(r.value, start.value, end.value)) != 0;
  }

  /// Interns a concept without edges; returns its id.
  ConceptId add_concept(const std::string& name) { return ConceptId{intern_concept(name)}; }

  /// Adds an edge, collapsing duplicates of (relation, start, end) onto the
  /// existing edge and keeping the larger weight.
  void add_edge(const std::string& relation, const std::string& start, const std::string& end,
                double weight) {
    RelationId r{relations_.intern(relation)};
    ConceptId s{intern_concept(start)};
    ConceptId t{intern_concept(end)};
    auto key = std::make_tuple(r.value, s.value, t.value);
    auto [it, inserted] = edge_index_.try_emplace(key, static_cast<std::uint32_t>(edges_.size()));
    if (!inserted) {
      Edge& existing = edges_[it->second];
      existing.weight = std::max(existing.weight, weight);
      return;
    }
    edges_.push_back({r, s, t, weight});
    out_[s.value].push_back(it->second);
    in_[t.value].push_back(it->second);
  }

 private:
  std::uint32_t intern_concept(const std::string& name) {
    auto id = concepts_.intern(name);
    if (id == out_.size()) {
      out_.emplace_back();
      in_.emplace_back();
    }
    return id;
  }

  Interner concepts_;
  Interner relations_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> out_;
  std::vector<std::vector<std::uint32_t>> in_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t> edge_index_;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    auto pos = line.find(sep, begin);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, pos - begin));
    begin = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Reads `relation<TAB>start<TAB>end[<TAB>weight]` rows. Lines starting with
/// '#' and blank lines are skipped. Concept and relation names may not
/// contain '/' because that character delimits rendered paths.
inline KnowledgeGraph load_edges(std::istream& in) {
  KnowledgeGraph graph;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw DataError("edge file line " + std::to_string(line_no) + ": " + why);
    };
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) {
      fail("expected 3 or 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    std::string names[3];
    for (int i = 0; i < 3; ++i) {
      try {
        names[i] = normalize(fields[i]);
      } catch (const UsageError&) {
        fail("empty field " + std::to_string(i + 1));
      }
      if (names[i].find('/') != std::string::npos) fail("'/' is not allowed in names: " + names[i]);
    }
    double weight = 1.0;
    if (fields.size() == 4) {
      auto w = detail::parse_double(fields[3]);
      if (!w || !std::isfinite(*w) || *w < 0.0) fail("weight must be a finite nonnegative number");
      weight = *w;
    }
    graph.add_edge(names[0], names[1], names[2], weight);
  }
  return graph;
}

inline KnowledgeGraph load_edges_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file: " + path);
  return load_edges(in);
}

}  // namespace csrc
