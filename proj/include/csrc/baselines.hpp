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

// Count-based comparison systems for the cloze task: uniform random,
// unigram prior and the "single" conditional model P(r | a).

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrc/dataset.hpp"
#include "csrc/error.hpp"

namespace csrc {

/// Index of the largest value; the first one wins ties.
template <typename Range>
std::size_t argmax_first(const Range& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size(values); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

/// `n` uniform draws over [0, vocab_size).
inline std::vector<std::size_t> predict_random(std::size_t vocab_size, std::uint64_t seed, std::size_t n) {
  if (vocab_size == 0) throw UsageError("predict_random: empty vocabulary");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocab_size - 1);
  std::vector<std::size_t> out(n);
  for (auto& x : out) x = pick(rng);
  return out;
}

struct UnigramModel {
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  /// Add-one smoothed prior.
  double probability(std::size_t r) const {
    return (static_cast<double>(counts.at(r)) + 1.0) / (static_cast<double>(total + counts.size()));
  }
  std::size_t predict() const { return argmax_first(counts); }
};

inline UnigramModel train_unigram(const std::vector<ClozeExample>& train, const Vocabulary& vocab) {
  if (train.empty()) throw UsageError("train_unigram: empty training set");
  UnigramModel m;
  m.counts.assign(vocab.size(), 0);
  for (const auto& ex : train) ++m.counts[vocab.index(ex.target)];
  m.total = train.size();
  return m;
}

/// Context key of an input slot. Concepts and relation labels live in
/// separate namespaces so a concept spelled like a relation stays distinct.
inline std::string context_key(const Slot& s) {
  return (s.kind == SlotKind::Relation ? "r:" : "c:") + s.token;
}

/// F(r) = sum_i log P(r | a_i) given one conditional distribution per context.
inline std::vector<double> sum_log_conditionals(std::span<const std::vector<double>> conditionals) {
  if (conditionals.empty()) throw UsageError("sum_log_conditionals: no context tokens");
  std::vector<double> f(conditionals.front().size(), 0.0);
  for (const auto& p : conditionals) {
    if (p.size() != f.size()) throw UsageError("sum_log_conditionals: inconsistent class counts");
    for (std::size_t r = 0; r < f.size(); ++r) f[r] += std::log(p[r]);
  }
  return f;
}

struct SingleModel {
  std::map<std::string, std::vector<std::size_t>> pair_counts;
  std::map<std::string, std::size_t> context_counts;
  std::size_t vocab_size = 0;

  /// P(r | a) = (count(a, r) + 1) / (count(a) + |vocab|).
  std::vector<double> conditional(const std::string& context) const {
    std::vector<double> p(vocab_size);
    auto it = pair_counts.find(context);
    const double denom = static_cast<double>((it == pair_counts.end() ? 0 : context_counts.at(context)) + vocab_size);
    for (std::size_t r = 0; r < vocab_size; ++r) {
      const double c = it == pair_counts.end() ? 0.0 : static_cast<double>(it->second[r]);
      p[r] = (c + 1.0) / denom;
    }
    return p;
  }

  /// F(r, a) summed over every non-pad input slot of the example.
  std::vector<double> score(const ClozeExample& ex) const {
    std::vector<std::vector<double>> conditionals;
    for (const auto& s : ex.slots) {
      if (s.kind != SlotKind::Pad) conditionals.push_back(conditional(context_key(s)));
    }
    if (conditionals.empty()) throw UsageError("score_single: example has no input tokens");
    return sum_log_conditionals(conditionals);
  }

  std::size_t predict(const ClozeExample& ex) const { return argmax_first(score(ex)); }
};

inline SingleModel train_single(const std::vector<ClozeExample>& train, const Vocabulary& vocab) {
  if (train.empty()) throw UsageError("train_single: empty training set");
  SingleModel m;
  m.vocab_size = vocab.size();
  for (const auto& ex : train) {
    const auto r = vocab.index(ex.target);
    for (const auto& s : ex.slots) {
      if (s.kind == SlotKind::Pad) continue;
      auto key = context_key(s);
      auto& row = m.pair_counts[key];
      if (row.empty()) row.assign(m.vocab_size, 0);
      ++row[r];
      ++m.context_counts[key];
    }
  }
  return m;
}

// Versioned model documents.

inline constexpr int kCountModelVersion = 1;

inline void check_document(const nlohmann::json& j, const std::string& format) {
  if (j.value("format", std::string{}) != format) {
    throw DataError("model document is not a " + format + " model");
  }
  if (j.value("version", -1) != kCountModelVersion) {
    throw DataError(format + " model version " + std::to_string(j.value("version", -1)) + " unsupported (expected " +
                    std::to_string(kCountModelVersion) + ")");
  }
}

inline nlohmann::json to_json(const UnigramModel& m) {
  return {{"format", "csrc-unigram"}, {"version", kCountModelVersion}, {"counts", m.counts}, {"total", m.total}};
}

inline UnigramModel unigram_from_json(const nlohmann::json& j) {
  check_document(j, "csrc-unigram");
  UnigramModel m;
  m.counts = j.at("counts").get<std::vector<std::size_t>>();
  m.total = j.at("total").get<std::size_t>();
  return m;
}

inline nlohmann::json to_json(const SingleModel& m) {
  return {{"format", "csrc-single"},
          {"version", kCountModelVersion},
          {"vocab_size", m.vocab_size},
          {"pair_counts", m.pair_counts},
          {"context_counts", m.context_counts}};
}

inline SingleModel single_from_json(const nlohmann::json& j) {
  check_document(j, "csrc-single");
  SingleModel m;
  m.vocab_size = j.at("vocab_size").get<std::size_t>();
  m.pair_counts = j.at("pair_counts").get<std::map<std::string, std::vector<std::size_t>>>();
  m.context_counts = j.at("context_counts").get<std::map<std::string, std::size_t>>();
  return m;
}

}  // namespace csrc
