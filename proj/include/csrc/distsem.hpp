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

// Word-vector tables and distributional relatedness between surface forms.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csrc/error.hpp"
#include "csrc/kb_graph.hpp"

namespace csrc {

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0, std::string source_tag = {})
      : dim_(dim), source_tag_(std::move(source_tag)) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source_tag() const { return source_tag_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Rows skipped while loading (wrong arity, non-numeric, duplicates).
  std::size_t rejected_rows() const { return rejected_rows_; }
  std::size_t declared_count() const { return declared_count_; }

  /// Stores a vector under the normalized token. Returns false (and stores
  /// nothing) when the token is already present.
  bool add(std::string_view token, std::span<const double> values) {
    if (values.size() != dim_) {
      throw DataError("embedding for '" + std::string(token) + "' has " + std::to_string(values.size()) +
                      " components, table dim is " + std::to_string(dim_));
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw DataError("non-finite embedding component for '" + std::string(token) + "'");
    }
    auto key = normalize(token);
    auto [it, inserted] = index_.try_emplace(key, tokens_.size());
    if (!inserted) return false;
    tokens_.push_back(key);
    data_.insert(data_.end(), values.begin(), values.end());
    return true;
  }

  std::optional<std::span<const double>> vector(std::string_view token) const {
    std::string key;
    try {
      key = normalize(token);
    } catch (const UsageError&) {
      return std::nullopt;
    }
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return std::span<const double>(data_.data() + it->second * dim_, dim_);
  }

  /// Mean of the in-vocabulary vectors of the underscore-separated parts of
  /// `phrase`; absent when no part is in vocabulary.
  std::optional<std::vector<double>> phrase_vector(std::string_view phrase) const {
    std::string key;
    try {
      key = normalize(phrase);
    } catch (const UsageError&) {
      return std::nullopt;
    }
    std::vector<double> sum(dim_, 0.0);
    std::size_t found = 0;
    for (auto part : detail::split(key, '_')) {
      if (part.empty()) continue;
      auto v = vector(part);
      if (!v) continue;
      for (std::size_t i = 0; i < dim_; ++i) sum[i] += (*v)[i];
      ++found;
    }
    if (found == 0) return std::nullopt;
    for (double& x : sum) x /= static_cast<double>(found);
    return sum;
  }

  /// Multiplies a stored vector in place.
  void scale(std::string_view token, double factor) {
    auto it = index_.find(normalize(token));
    if (it == index_.end()) throw UsageError("scale: token not in table");
    for (std::size_t i = 0; i < dim_; ++i) data_[it->second * dim_ + i] *= factor;
  }

 private:
  friend EmbeddingTable load_word_vectors(std::istream&, std::optional<std::size_t>, std::string);

  std::size_t dim_;
  std::string source_tag_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t rejected_rows_ = 0;
  std::size_t declared_count_ = 0;
};

/// Reads the word2vec text format: a `<count> <dim>` header, then
/// `<token> <f1> ... <fdim>` rows. Rows of the wrong arity are skipped and
/// counted. Throws when the header is malformed, when `expected_dim`
/// disagrees with it, or when rows exist but none matches the header dim.
inline EmbeddingTable load_word_vectors(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt,
                                        std::string source_tag = {}) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("word-vector file is empty (missing header)");
  detail::strip_cr(line);
  std::istringstream header(line);
  long long count = -1;
  long long dim = -1;
  std::string extra;
  if (!(header >> count >> dim) || (header >> extra) || count < 0 || dim <= 0) {
    throw DataError("word-vector header must be '<count> <dim>', got: " + line);
  }
  if (expected_dim && *expected_dim != static_cast<std::size_t>(dim)) {
    throw DataError("word-vector dim " + std::to_string(dim) + " does not match expected " +
                    std::to_string(*expected_dim));
  }
  EmbeddingTable table(static_cast<std::size_t>(dim), std::move(source_tag));
  table.declared_count_ = static_cast<std::size_t>(count);
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    ++rows;
    std::istringstream row(line);
    std::string token;
    row >> token;
    values.clear();
    std::string field;
    bool numeric = true;
    while (row >> field) {
      auto v = detail::parse_double(field);
      if (!v || !std::isfinite(*v)) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric || values.size() != table.dim() || token.empty() || !table.add(token, values)) {
      ++table.rejected_rows_;
    }
  }
  if (rows > 0 && table.size() == 0) {
    throw DataError("no word-vector row matches header dim " + std::to_string(dim));
  }
  return table;
}

inline EmbeddingTable load_word_vectors_file(const std::string& path,
                                             std::optional<std::size_t> expected_dim = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word-vector file: " + path);
  return load_word_vectors(in, expected_dim, path);
}

/// Table of seeded uniform(-0.5, 0.5) vectors, used when no pretrained
/// vectors are wanted.
inline EmbeddingTable random_table(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(dim, "random");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  std::vector<double> v(dim);
  for (const auto& t : tokens) {
    for (double& x : v) x = uniform(rng);
    table.add(t, v);
  }
  return table;
}

/// Plain cosine; 0 when either vector has zero norm.
inline double raw_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

/// Cosine of phrase vectors clamped to [0, 1]. Out-of-vocabulary phrases
/// score 0.
inline double relatedness(const EmbeddingTable& t, std::string_view a, std::string_view b) {
  auto va = t.phrase_vector(a);
  auto vb = t.phrase_vector(b);
  if (!va || !vb) return 0.0;
  return std::clamp(raw_cosine(*va, *vb), 0.0, 1.0);
}

}  // namespace csrc
