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

// Distributional coherence scoring of candidate paths and the half-of-max
// pruning rule applied per entity pair.

#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "csrc/distsem.hpp"
#include "csrc/error.hpp"
#include "csrc/kb_graph.hpp"
#include "csrc/path_search.hpp"

namespace csrc {

enum class ScoringStrategy {
  TargetAnchored,  // intermediates against the target concept
  AllPairs,        // every unordered concept pair on the path
  Consecutive,     // adjacent concepts
};

inline std::string to_string(ScoringStrategy s) {
  switch (s) {
    case ScoringStrategy::TargetAnchored: return "target-anchored";
    case ScoringStrategy::AllPairs: return "all-pairs";
    case ScoringStrategy::Consecutive: return "consecutive";
  }
  return "?";
}

inline ScoringStrategy parse_strategy(std::string_view name) {
  if (name == "target-anchored" || name == "target") return ScoringStrategy::TargetAnchored;
  if (name == "all-pairs") return ScoringStrategy::AllPairs;
  if (name == "consecutive") return ScoringStrategy::Consecutive;
  throw UsageError("unknown scoring strategy '" + std::string(name) +
                   "' (expected target-anchored, all-pairs or consecutive)");
}

struct ScoredPath {
  RelationPath path;
  double sq = 0.0;
  ScoringStrategy strategy = ScoringStrategy::TargetAnchored;
};

struct FilterOutcome {
  std::vector<ScoredPath> kept;
  std::vector<ScoredPath> dropped;
  double msq = 0.0;
  double threshold = 0.0;
};

/// Scores a path with any symmetric relatedness `rel(ConceptId, ConceptId)`
/// returning values in [0, 1].
template <typename Relatedness>
ScoredPath score_path(const RelationPath& p, Relatedness&& rel, ScoringStrategy strategy) {
  const auto& c = p.concepts;
  const std::size_t n = c.size();
  double sum = 0.0;
  std::size_t terms = 0;
  switch (strategy) {
    case ScoringStrategy::TargetAnchored:
      if (n == 2) {
        sum = rel(c[0], c[1]);
        terms = 1;
      }
      for (std::size_t i = 1; i + 1 < n; ++i, ++terms) sum += rel(c[i], c.back());
      break;
    case ScoringStrategy::AllPairs:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++terms) sum += rel(c[i], c[j]);
      }
      break;
    case ScoringStrategy::Consecutive:
      for (std::size_t i = 0; i + 1 < n; ++i, ++terms) sum += rel(c[i], c[i + 1]);
      break;
  }
  double sq = terms ? sum / static_cast<double>(terms) : 0.0;
  return {p, std::clamp(sq, 0.0, 1.0), strategy};
}

inline ScoredPath score_path(const EmbeddingTable& t, const KnowledgeGraph& g, const RelationPath& p,
                             ScoringStrategy strategy = ScoringStrategy::TargetAnchored) {
  return score_path(
      p, [&](ConceptId a, ConceptId b) { return relatedness(t, g.concept_name(a), g.concept_name(b)); }, strategy);
}

/// Drops every candidate with sq < msq - msq/2 (= msq/2). Input order is
/// preserved within kept and dropped.
inline FilterOutcome filter_paths(std::vector<ScoredPath> candidates) {
  FilterOutcome out;
  if (candidates.empty()) return out;
  for (const auto& c : candidates) {
    if (c.strategy != candidates.front().strategy) {
      throw UsageError("filter_paths: candidates scored with different strategies");
    }
    out.msq = std::max(out.msq, c.sq);
  }
  out.threshold = out.msq - out.msq / 2.0;
  for (auto& c : candidates) {
    if (c.sq < out.threshold) {
      out.dropped.push_back(std::move(c));
    } else {
      out.kept.push_back(std::move(c));
    }
  }
  return out;
}

/// Filtered-paths line: path line plus "\tsq=<6 decimals>".
inline std::string format_scored_line(const KnowledgeGraph& g, const ScoredPath& s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "\tsq=%.6f", s.sq);
  return format_path_line(g, s.path) + buf;
}

}  // namespace csrc
