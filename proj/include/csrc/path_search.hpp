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

// Bounded enumeration of simple relation paths between two concepts.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csrc/error.hpp"
#include "csrc/kb_graph.hpp"

namespace csrc {

enum class DirectionMode { Directed, Undirected };

struct SearchLimits {
  std::size_t max_len = 3;
  // Largest max_len accepted; longer paths explode combinatorially.
  std::size_t max_len_cap = 3;
  std::optional<std::size_t> max_paths;
  DirectionMode direction_mode = DirectionMode::Undirected;
};

/// Alternating concept/relation chain e1 -R1- X1 -R2- ... -Rk- e2.
struct RelationPath {
  std::vector<ConceptId> concepts;
  std::vector<RelationId> relations;
  std::vector<Direction> directions;

  std::size_t size() const { return relations.size(); }
  ConceptId source() const { return concepts.front(); }
  ConceptId target() const { return concepts.back(); }

  bool operator==(const RelationPath&) const = default;
};

/// Canonical order: shorter first, then lexicographic over
/// (relation, next concept, direction) steps.
inline bool canonical_less(const RelationPath& a, const RelationPath& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ka = std::tie(a.relations[i], a.concepts[i + 1], a.directions[i]);
    auto kb = std::tie(b.relations[i], b.concepts[i + 1], b.directions[i]);
    if (ka != kb) return ka < kb;
  }
  return a.concepts.front() < b.concepts.front();
}

struct PathSearchResult {
  std::vector<RelationPath> paths;
  bool truncated = false;
};

namespace detail {

struct Step {
  RelationId relation;
  ConceptId next;
  Direction direction;
};

inline void validate_query(const KnowledgeGraph& g, ConceptId e1, ConceptId e2, const SearchLimits& limits) {
  if (!g.contains(e1) || !g.contains(e2)) throw UsageError("path search: unknown endpoint");
  if (e1 == e2) throw UsageError("path search: endpoints must differ");
  if (limits.max_len < 1 || limits.max_len > limits.max_len_cap) {
    throw UsageError("path search: max_len must be in [1, " + std::to_string(limits.max_len_cap) + "]");
  }
}

// Steps leaving `v` under the direction mode.
template <typename Fn>
void for_each_step(const KnowledgeGraph& g, ConceptId v, DirectionMode mode, Fn&& fn) {
  for (auto e : g.outgoing(v)) {
    const Edge& edge = g.edge(e);
    fn(Step{edge.relation, edge.end, Direction::Forward});
  }
  if (mode == DirectionMode::Undirected) {
    for (auto e : g.incoming(v)) {
      const Edge& edge = g.edge(e);
      fn(Step{edge.relation, edge.start, Direction::Reverse});
    }
  }
}

// Final hops into the target, keyed by the concept they leave from.
inline std::unordered_map<std::uint32_t, std::vector<Step>> steps_into(const KnowledgeGraph& g, ConceptId target,
                                                                       DirectionMode mode) {
  std::unordered_map<std::uint32_t, std::vector<Step>> into;
  for (auto e : g.incoming(target)) {
    const Edge& edge = g.edge(e);
    if (edge.start != target) into[edge.start.value].push_back({edge.relation, target, Direction::Forward});
  }
  if (mode == DirectionMode::Undirected) {
    for (auto e : g.outgoing(target)) {
      const Edge& edge = g.edge(e);
      if (edge.end != target) into[edge.end.value].push_back({edge.relation, target, Direction::Reverse});
    }
  }
  return into;
}

// Depth-first walk over simple prefixes; `on_prefix(prefix, hops)` is called
// for every prefix ending at a concept with hops into the target.
template <typename Visit>
void walk_prefixes(const KnowledgeGraph& g, ConceptId e1, ConceptId e2, const SearchLimits& limits,
                   const std::unordered_map<std::uint32_t, std::vector<Step>>& into, Visit&& on_prefix) {
  RelationPath prefix;
  prefix.concepts.push_back(e1);
  auto on_stack = [&](ConceptId c) {
    return std::find(prefix.concepts.begin(), prefix.concepts.end(), c) != prefix.concepts.end();
  };
  auto recurse = [&](auto& self) -> void {
    ConceptId v = prefix.concepts.back();
    if (auto it = into.find(v.value); it != into.end()) on_prefix(prefix, it->second);
    if (prefix.size() + 1 >= limits.max_len) return;
    for_each_step(g, v, limits.direction_mode, [&](const Step& s) {
      if (s.next == e2 || on_stack(s.next)) return;
      prefix.concepts.push_back(s.next);
      prefix.relations.push_back(s.relation);
      prefix.directions.push_back(s.direction);
      self(self);
      prefix.concepts.pop_back();
      prefix.relations.pop_back();
      prefix.directions.pop_back();
    });
  };
  recurse(recurse);
}

}  // namespace detail

/// All simple paths from e1 to e2 with at most `limits.max_len` relations,
/// in canonical order. When `max_paths` is set the list is cut after that
/// many canonical entries and `truncated` is raised.
inline PathSearchResult enumerate_paths(const KnowledgeGraph& g, ConceptId e1, ConceptId e2,
                                        const SearchLimits& limits = {}) {
  detail::validate_query(g, e1, e2, limits);
  auto into = detail::steps_into(g, e2, limits.direction_mode);
  PathSearchResult result;
  detail::walk_prefixes(g, e1, e2, limits, into, [&](const RelationPath& prefix, const std::vector<detail::Step>& hops) {
    for (const auto& hop : hops) {
      RelationPath p = prefix;
      p.concepts.push_back(hop.next);
      p.relations.push_back(hop.relation);
      p.directions.push_back(hop.direction);
      result.paths.push_back(std::move(p));
    }
  });
  std::sort(result.paths.begin(), result.paths.end(), canonical_less);
  if (limits.max_paths && result.paths.size() > *limits.max_paths) {
    result.paths.resize(*limits.max_paths);
    result.truncated = true;
  }
  return result;
}

/// Number of paths per length; only nonzero lengths appear.
inline std::map<std::size_t, std::size_t> count_paths_by_length(const KnowledgeGraph& g, ConceptId e1, ConceptId e2,
                                                                std::size_t max_len,
                                                                DirectionMode mode = DirectionMode::Undirected) {
  SearchLimits limits;
  limits.max_len = max_len;
  limits.max_len_cap = std::max(max_len, limits.max_len_cap);
  limits.direction_mode = mode;
  detail::validate_query(g, e1, e2, limits);
  auto into = detail::steps_into(g, e2, mode);
  std::map<std::size_t, std::size_t> counts;
  detail::walk_prefixes(g, e1, e2, limits, into, [&](const RelationPath& prefix, const std::vector<detail::Step>& hops) {
    counts[prefix.size() + 1] += hops.size();
  });
  return counts;
}

/// "child/canbe/baby/atlocation/cradle"
inline std::string render_path(const KnowledgeGraph& g, const RelationPath& p) {
  std::string out = g.concept_name(p.concepts.front());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out += '/';
    out += g.relation_name(p.relations[i]);
    out += '/';
    out += g.concept_name(p.concepts[i + 1]);
  }
  return out;
}

/// "f,r,f"
inline std::string render_directions(const RelationPath& p) {
  std::string out;
  for (std::size_t i = 0; i < p.directions.size(); ++i) {
    if (i) out += ',';
    out += direction_code(p.directions[i]);
  }
  return out;
}

inline std::string format_path_line(const KnowledgeGraph& g, const RelationPath& p) {
  return render_path(g, p) + '\t' + render_directions(p);
}

/// Inverse of format_path_line. Every step must name an existing edge in the
/// stated direction. Extra tab-separated fields after the directions are
/// ignored (the filtered format appends a score).
inline RelationPath parse_path_line(const KnowledgeGraph& g, std::string_view line) {
  auto fields = detail::split(line, '\t');
  if (fields.size() < 2) throw DataError("path line lacks a direction field: " + std::string(line));
  auto tokens = detail::split(fields[0], '/');
  auto dirs = detail::split(fields[1], ',');
  if (tokens.size() < 3 || tokens.size() % 2 == 0 || dirs.size() != tokens.size() / 2) {
    throw DataError("malformed path rendering: " + std::string(line));
  }
  RelationPath p;
  try {
    p.concepts.push_back(g.concept_id(tokens[0]));
    for (std::size_t i = 1; i < tokens.size(); i += 2) {
      p.relations.push_back(g.relation_id(tokens[i]));
      p.concepts.push_back(g.concept_id(tokens[i + 1]));
    }
  } catch (const UsageError& e) {
    throw DataError(std::string("path refers to unknown name: ") + e.what());
  }
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (dirs[i] == "f") {
      p.directions.push_back(Direction::Forward);
    } else if (dirs[i] == "r") {
      p.directions.push_back(Direction::Reverse);
    } else {
      throw DataError("bad direction code '" + std::string(dirs[i]) + "'");
    }
    bool fwd = p.directions[i] == Direction::Forward;
    ConceptId from = fwd ? p.concepts[i] : p.concepts[i + 1];
    ConceptId to = fwd ? p.concepts[i + 1] : p.concepts[i];
    if (!g.has_edge(p.relations[i], from, to)) {
      throw DataError("path step is not an edge of the graph: " + std::string(line));
    }
  }
  return p;
}

}  // namespace csrc
