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

// File-based pipeline: a flat key/value configuration, stage functions that
// read and write workdir artifacts, and the ConceptNet dump converter.
// Every text artifact starts with "# csrc <kind> config=<hash> seed=<n>".

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrc/baselines.hpp"
#include "csrc/dataset.hpp"
#include "csrc/distsem.hpp"
#include "csrc/dna_filter.hpp"
#include "csrc/error.hpp"
#include "csrc/eval.hpp"
#include "csrc/forest.hpp"
#include "csrc/kb_graph.hpp"
#include "csrc/neural.hpp"
#include "csrc/path_search.hpp"

namespace csrc {

namespace fs = std::filesystem;

struct PipelineConfig {
  // Input files and output directory. Relative paths resolve against
  // base_dir (the directory of the config file).
  std::string edges;
  std::string vectors;
  std::string pairs;
  std::string workdir = "work";
  fs::path base_dir = ".";

  std::uint64_t seed = 1;

  std::size_t max_len = 3;
  std::size_t max_paths = 0;  // 0 = unlimited
  DirectionMode direction = DirectionMode::Undirected;
  ScoringStrategy strategy = ScoringStrategy::TargetAnchored;

  double test_fraction = 0.25;
  double dev_fraction = 0.25;

  std::string embedding = "pretrained";  // pretrained | random
  std::size_t embedding_dim = 300;       // random embedding width when no vectors file is set

  std::vector<std::size_t> lstm_hidden{450, 200, 100};
  Architecture lstm_architecture = Architecture::StackedRecurrent;
  double lstm_dropout = 0.5;
  std::size_t lstm_epochs = 50;
  std::size_t lstm_batch = 25;
  double lstm_learning_rate = 1e-3;
  bool lstm_train_entities = false;

  std::size_t forest_trees = 100;
  std::size_t forest_max_depth = 0;
  std::size_t forest_features = 0;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
  fs::path work() const { return resolve(workdir); }

  /// Canonical key=value listing of every setting except the output location.
  std::string canonical() const {
    std::ostringstream out;
    auto sizes = [](const std::vector<std::size_t>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    out << "dev_fraction=" << dev_fraction << '\n'
        << "direction=" << (direction == DirectionMode::Directed ? "directed" : "undirected") << '\n'
        << "edges=" << edges << '\n'
        << "embedding=" << embedding << '\n'
        << "embedding_dim=" << embedding_dim << '\n'
        << "forest_features=" << forest_features << '\n'
        << "forest_max_depth=" << forest_max_depth << '\n'
        << "forest_trees=" << forest_trees << '\n'
        << "lstm_architecture=" << (lstm_architecture == Architecture::StackedRecurrent ? "stacked" : "recurrent-dense")
        << '\n'
        << "lstm_batch=" << lstm_batch << '\n'
        << "lstm_dropout=" << lstm_dropout << '\n'
        << "lstm_epochs=" << lstm_epochs << '\n'
        << "lstm_hidden=" << sizes(lstm_hidden) << '\n'
        << "lstm_learning_rate=" << lstm_learning_rate << '\n'
        << "lstm_train_entities=" << (lstm_train_entities ? "true" : "false") << '\n'
        << "max_len=" << max_len << '\n'
        << "max_paths=" << max_paths << '\n'
        << "pairs=" << pairs << '\n'
        << "seed=" << seed << '\n'
        << "strategy=" << to_string(strategy) << '\n'
        << "test_fraction=" << test_fraction << '\n'
        << "vectors=" << vectors << '\n';
    return out.str();
  }

  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::string header(const std::string& kind) const {
    return "# csrc " + kind + " config=" + hash() + " seed=" + std::to_string(seed);
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError("config: '" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace detail

/// Applies one setting; unknown keys are usage errors.
inline void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "edges") c.edges = value;
  else if (key == "vectors") c.vectors = value;
  else if (key == "pairs") c.pairs = value;
  else if (key == "workdir") c.workdir = value;
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "max_len") c.max_len = parse_number<std::size_t>(key, value);
  else if (key == "max_paths") c.max_paths = parse_number<std::size_t>(key, value);
  else if (key == "direction") {
    if (value == "directed") c.direction = DirectionMode::Directed;
    else if (value == "undirected") c.direction = DirectionMode::Undirected;
    else throw UsageError("config: direction must be directed or undirected");
  } else if (key == "strategy") c.strategy = parse_strategy(value);
  else if (key == "test_fraction") c.test_fraction = parse_number<double>(key, value);
  else if (key == "dev_fraction") c.dev_fraction = parse_number<double>(key, value);
  else if (key == "embedding") {
    if (value != "pretrained" && value != "random") throw UsageError("config: embedding must be pretrained or random");
    c.embedding = value;
  } else if (key == "embedding_dim") c.embedding_dim = parse_number<std::size_t>(key, value);
  else if (key == "lstm_hidden") {
    c.lstm_hidden.clear();
    for (auto part : detail::split(value, ',')) c.lstm_hidden.push_back(parse_number<std::size_t>(key, detail::trim(part)));
  } else if (key == "lstm_architecture") {
    if (value == "stacked") c.lstm_architecture = Architecture::StackedRecurrent;
    else if (value == "recurrent-dense") c.lstm_architecture = Architecture::RecurrentThenDense;
    else throw UsageError("config: lstm_architecture must be stacked or recurrent-dense");
  } else if (key == "lstm_dropout") c.lstm_dropout = parse_number<double>(key, value);
  else if (key == "lstm_epochs") c.lstm_epochs = parse_number<std::size_t>(key, value);
  else if (key == "lstm_batch") c.lstm_batch = parse_number<std::size_t>(key, value);
  else if (key == "lstm_learning_rate") c.lstm_learning_rate = parse_number<double>(key, value);
  else if (key == "lstm_train_entities") c.lstm_train_entities = detail::parse_bool(key, value);
  else if (key == "forest_trees") c.forest_trees = parse_number<std::size_t>(key, value);
  else if (key == "forest_max_depth") c.forest_max_depth = parse_number<std::size_t>(key, value);
  else if (key == "forest_features") c.forest_features = parse_number<std::size_t>(key, value);
  else throw UsageError("config: unknown key '" + key + "'");
}

/// `key = value` lines; '#' starts a comment line.
inline PipelineConfig parse_config(std::istream& in, const fs::path& base_dir = ".") {
  PipelineConfig c;
  c.base_dir = base_dir;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(c, detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1)));
  }
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  return parse_config(in, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

struct ArtifactHeader {
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline std::optional<ArtifactHeader> parse_header(const std::string& line) {
  std::istringstream in(line);
  std::string hash_mark, tool, kind, config, seed;
  if (!(in >> hash_mark >> tool >> kind >> config >> seed) || hash_mark != "#" || tool != "csrc") return std::nullopt;
  if (config.rfind("config=", 0) != 0 || seed.rfind("seed=", 0) != 0) return std::nullopt;
  ArtifactHeader h{kind, config.substr(7), 0};
  try {
    h.seed = std::stoull(seed.substr(5));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return h;
}

inline ArtifactHeader read_header(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) throw DataError("cannot read artifact: " + path.string());
  auto h = parse_header(line);
  if (!h) throw DataError("artifact lacks a csrc header: " + path.string());
  return *h;
}

struct ConvertStats {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t skipped = 0;
};

namespace detail {

// "/c/en/new_york/n/..." -> "new_york"; empty unless English.
inline std::string english_term(std::string_view uri) {
  constexpr std::string_view prefix = "/c/en/";
  if (uri.substr(0, prefix.size()) != prefix) return {};
  uri.remove_prefix(prefix.size());
  return std::string(uri.substr(0, uri.find('/')));
}

// "/r/IsA" -> "IsA", "/r/dbpedia/genre" -> "genre".
inline std::string relation_label(std::string_view uri) {
  if (uri.substr(0, 3) != "/r/") return {};
  auto slash = uri.rfind('/');
  return std::string(uri.substr(slash + 1));
}

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Converts ConceptNet assertion rows (URI, relation, start, end, ...) into
/// edge rows. English-only; the weight comes from a numeric sixth column
/// (5.4 layout) or from the "weight" key of a JSON fifth column (5.5+
/// layout), default 1. Rows with negative weights are skipped.
inline ConvertStats convert_conceptnet(std::istream& in, std::ostream& out) {
  ConvertStats stats;
  std::string line;
  std::set<std::string> written;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    ++stats.rows;
    auto f = detail::split(line, '\t');
    if (f.size() < 4) {
      ++stats.skipped;
      continue;
    }
    std::string rel = detail::relation_label(f[1]);
    std::string start = detail::english_term(f[2]);
    std::string end = detail::english_term(f[3]);
    double weight = 1.0;
    if (f.size() >= 6) {
      if (auto w = detail::parse_double(f[5])) weight = *w;
    } else if (f.size() == 5) {
      auto meta = nlohmann::json::parse(f[4], nullptr, false);
      if (meta.is_object() && meta.contains("weight") && meta["weight"].is_number()) weight = meta["weight"].get<double>();
    }
    if (rel.empty() || start.empty() || end.empty() || !std::isfinite(weight) || weight < 0.0) {
      ++stats.skipped;
      continue;
    }
    out << normalize(rel) << '\t' << start << '\t' << end << '\t' << detail::shortest(weight) << '\n';
    ++stats.kept;
  }
  return stats;
}

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"random", "unigram", "single", "forest", "lstm"};
  return names;
}

/// Runs pipeline stages against a workdir. Each stage checks that its
/// prerequisites exist and names the command that produces a missing one.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::ostream& log) : c_(std::move(config)), log_(log) {}

  const PipelineConfig& config() const { return c_; }

  std::string ingest() {
    auto g = graph();
    std::string summary = std::to_string(g.concept_count()) + " concepts, " + std::to_string(g.relation_count()) +
                          " relations, " + std::to_string(g.edge_count()) + " edges";
    fs::create_directories(c_.work());
    write_text(c_.work() / "graph_summary.txt", c_.header("graph-summary") + "\n" + summary + "\n");
    log_ << summary << '\n';
    return summary;
  }

  struct PairRecord {
    std::size_t index = 0;
    std::string e1, e2;
    std::string status;  // ok | skipped:<reason>
    std::size_t paths = 0;
    bool truncated = false;
    std::size_t kept = 0;
  };

  std::vector<PairRecord> paths() {
    auto g = graph();
    SearchLimits limits;
    limits.max_len = c_.max_len;
    limits.max_len_cap = std::max<std::size_t>(3, c_.max_len);
    limits.direction_mode = c_.direction;
    if (c_.max_paths) limits.max_paths = c_.max_paths;
    auto dir = c_.work() / "paths";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<PairRecord> records;
    for (auto& [e1, e2] : read_pairs()) {
      PairRecord rec{records.size() + 1, e1, e2, "ok"};
      auto a = g.find_concept(e1), b = g.find_concept(e2);
      if (!a || !b) {
        rec.status = "skipped:unknown-concept";
      } else if (*a == *b) {
        rec.status = "skipped:same-concept";
      } else {
        auto result = enumerate_paths(g, *a, *b, limits);
        rec.paths = result.paths.size();
        rec.truncated = result.truncated;
        std::string body = c_.header("paths") + "\n# pair " + e1 + "\t" + e2 + "\n";
        for (const auto& p : result.paths) body += format_path_line(g, p) + "\n";
        write_text(dir / pair_file(rec.index), body);
      }
      records.push_back(rec);
    }
    std::string manifest = c_.header("paths-manifest") + "\nindex\te1\te2\tstatus\tpaths\ttruncated\n";
    std::size_t total = 0, skipped = 0;
    for (const auto& r : records) {
      manifest += std::to_string(r.index) + "\t" + r.e1 + "\t" + r.e2 + "\t" + r.status + "\t" + std::to_string(r.paths) +
                  "\t" + (r.truncated ? "yes" : "no") + "\n";
      total += r.paths;
      skipped += r.status != "ok";
    }
    write_text(dir / "manifest.tsv", manifest);
    log_ << "paths: " << total << " paths for " << records.size() - skipped << " pairs (" << skipped << " skipped)\n";
    return records;
  }

  std::vector<PairRecord> filter(const std::optional<fs::path>& keep_list = std::nullopt) {
    auto records = read_manifest(c_.work() / "paths" / "manifest.tsv", "paths");
    auto g = graph();
    auto table = vectors();
    std::optional<std::unordered_set<std::string>> approved;
    if (keep_list) approved = read_keep_list(*keep_list);
    auto dir = c_.work() / "filtered";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::size_t before = 0, after = 0;
    for (auto& rec : records) {
      if (rec.status != "ok") continue;
      std::vector<ScoredPath> scored;
      for (const auto& line : read_data_lines(c_.work() / "paths" / pair_file(rec.index))) {
        scored.push_back(score_path(table, g, parse_path_line(g, line), c_.strategy));
      }
      auto outcome = filter_paths(std::move(scored));
      std::string body = c_.header("filtered-paths") + "\n# pair " + rec.e1 + "\t" + rec.e2 + "\n";
      rec.kept = 0;
      for (const auto& s : outcome.kept) {
        if (approved && !approved->count(render_path(g, s.path))) continue;
        body += format_scored_line(g, s) + "\n";
        ++rec.kept;
      }
      write_text(dir / pair_file(rec.index), body);
      before += rec.paths;
      after += rec.kept;
    }
    std::string manifest = c_.header("filter-manifest") + "\nindex\te1\te2\tstatus\tbefore\tafter\n";
    for (const auto& r : records) {
      manifest += std::to_string(r.index) + "\t" + r.e1 + "\t" + r.e2 + "\t" + r.status + "\t" + std::to_string(r.paths) +
                  "\t" + std::to_string(r.kept) + "\n";
    }
    write_text(dir / "manifest.tsv", manifest);
    log_ << "filter (" << to_string(c_.strategy) << "): " << before << " -> " << after << " paths\n";
    return records;
  }

  DatasetSplit build_dataset() {
    auto records = read_manifest(c_.work() / "filtered" / "manifest.tsv", "filter");
    auto g = graph();
    std::vector<RelationPath> paths;
    for (const auto& rec : records) {
      if (rec.status != "ok") continue;
      for (const auto& line : read_data_lines(c_.work() / "filtered" / pair_file(rec.index))) {
        paths.push_back(parse_path_line(g, line));
      }
    }
    auto vocab = relation_vocabulary(g, paths);
    auto examples = build_examples(g, paths);
    auto parts = split(examples, c_.seed, c_.test_fraction, c_.dev_fraction);
    auto dir = c_.work() / "dataset";
    fs::create_directories(dir);
    auto write_part = [&](const std::string& name, const std::vector<ClozeExample>& xs) {
      std::ostringstream body;
      body << c_.header("examples-" + name) << '\n';
      write_examples(body, xs);
      write_text(dir / (name + ".jsonl"), body.str());
    };
    write_part("train", parts.train);
    write_part("dev", parts.dev);
    write_part("test", parts.test);
    std::string v = c_.header("relation-vocabulary") + "\n";
    for (const auto& n : vocab.names()) v += n + "\n";
    write_text(dir / "vocab.txt", v);
    log_ << "dataset: " << paths.size() << " paths, " << examples.size() << " examples (train " << parts.train.size()
         << ", dev " << parts.dev.size() << ", test " << parts.test.size() << "), " << vocab.size() << " relations\n";
    return parts;
  }

  /// Trains one of model_names() and returns the written model file.
  fs::path train(const std::string& model) {
    auto data = load_dataset();
    auto dir = c_.work() / "models";
    fs::create_directories(dir);
    nlohmann::json doc;
    if (model == "random") {
      doc = {{"format", "csrc-random"}, {"version", kCountModelVersion}, {"classes", data.vocab.size()}};
    } else if (model == "unigram") {
      doc = to_json(train_unigram(data.train, data.vocab));
    } else if (model == "single") {
      doc = to_json(train_single(data.train, data.vocab));
    } else if (model == "forest") {
      auto enc = encoder(data);
      ForestConfig fc;
      fc.n_trees = c_.forest_trees;
      fc.max_depth = c_.forest_max_depth;
      fc.feature_subsample = c_.forest_features;
      doc = to_json(train_forest(enc.encode_all(data.train), data.vocab.size(), fc, c_.seed));
    } else if (model == "lstm") {
      return train_lstm(data, dir);
    } else {
      throw UsageError("unknown model '" + model + "'");
    }
    doc["config_hash"] = c_.hash();
    doc["seed"] = c_.seed;
    auto path = dir / (model + ".json");
    write_text(path, doc.dump() + "\n");
    log_ << "trained " << model << " -> " << path.filename().string() << '\n';
    return path;
  }

  /// Evaluates the named models (all trained ones when empty) on the test
  /// partition and writes per-model reports plus the combined metric table.
  std::vector<std::pair<std::string, EvalReport>> evaluate(std::vector<std::string> models, bool force = false) {
    auto data = load_dataset();
    if (data.config_hash != c_.hash() && !force) {
      throw DataError("dataset was built under config " + data.config_hash + " but the current config is " + c_.hash() +
                      "; rerun the stages or pass --force");
    }
    auto dir = c_.work() / "models";
    if (models.empty()) {
      for (const auto& m : model_names()) {
        if (fs::exists(model_path(m))) models.push_back(m);
      }
      if (models.empty()) throw DataError("missing artifact: no trained models in " + dir.string() + " (run `csrc train` first)");
    }
    auto out_dir = c_.work() / "reports";
    fs::create_directories(out_dir);
    std::vector<std::pair<std::string, EvalReport>> results;
    for (const auto& m : models) {
      auto [report, cm] = evaluate_model(m, data, force);
      nlohmann::json j = to_json(report, cm, data.vocab);
      j["model"] = m;
      j["config_hash"] = c_.hash();
      j["seed"] = c_.seed;
      write_text(out_dir / (m + ".json"), j.dump(1) + "\n");
      write_text(out_dir / (m + ".txt"), c_.header("report-" + m) + "\n" + render_relation_table(report, data.vocab) + "\n" +
                                               render_confusion_table(report, data.vocab));
      results.emplace_back(m, report);
    }
    write_text(out_dir / "metrics.txt", c_.header("metrics") + "\n" + render_metric_table(results));
    log_ << render_metric_table(results);
    return results;
  }

  /// Combined tables from the JSON reports already in the workdir.
  std::string report() {
    auto dir = c_.work() / "reports";
    std::vector<std::pair<std::string, EvalReport>> results;
    std::string detail_tables;
    for (const auto& m : model_names()) {
      auto path = dir / (m + ".json");
      if (!fs::exists(path)) continue;
      std::ifstream in(path);
      auto j = nlohmann::json::parse(in);
      auto [r, cm] = report_from_json(j);
      Vocabulary vocab(j.at("relations").get<std::vector<std::string>>());
      results.emplace_back(m, r);
      detail_tables += "\n== " + m + " ==\n" + render_relation_table(r, vocab) + render_confusion_table(r, vocab);
    }
    if (results.empty()) throw DataError("missing artifact: no reports in " + dir.string() + " (run `csrc evaluate` first)");
    std::string text = c_.header("summary") + "\n" + render_metric_table(results) + detail_tables;
    write_text(dir / "summary.txt", text);
    log_ << text;
    return text;
  }

 private:
  struct Dataset {
    std::vector<ClozeExample> train, dev, test;
    Vocabulary vocab;
    std::string config_hash;
  };

  // Word-vector table, relation embedder and entity vocabulary shared by the
  // forest and the LSTM.
  struct Encoder {
    EmbeddingTable table;
    RelationEmbedder relations;
    Vocabulary relation_vocab;
    Vocabulary entities;
    bool index_entities = false;

    std::vector<EncodedExample> encode_all(const std::vector<ClozeExample>& xs) const {
      std::vector<EncodedExample> out;
      out.reserve(xs.size());
      for (const auto& x : xs) out.push_back(encode(x, table, relations, relation_vocab, index_entities ? &entities : nullptr));
      return out;
    }
  };

  KnowledgeGraph graph() const {
    if (c_.edges.empty()) throw UsageError("config: 'edges' is not set");
    auto path = c_.resolve(c_.edges);
    if (!fs::exists(path)) throw DataError("edge file not found: " + path.string());
    return load_edges_file(path.string());
  }

  EmbeddingTable vectors() const {
    if (c_.vectors.empty()) throw UsageError("config: 'vectors' is not set");
    auto path = c_.resolve(c_.vectors);
    if (!fs::exists(path)) throw DataError("word-vector file not found: " + path.string());
    return load_word_vectors_file(path.string());
  }

  Encoder encoder(const Dataset& data) const {
    Encoder e;
    e.relation_vocab = data.vocab;
    std::vector<ClozeExample> all = data.train;
    all.insert(all.end(), data.dev.begin(), data.dev.end());
    all.insert(all.end(), data.test.begin(), data.test.end());
    e.entities = entity_vocabulary(all);
    if (c_.embedding == "random") {
      const std::size_t dim = c_.vectors.empty() ? c_.embedding_dim : vectors().dim();
      e.table = random_table(e.entities.names(), dim, detail::derive_seed(c_.seed, 101));
    } else {
      e.table = vectors();
    }
    e.relations = RelationEmbedder::random(data.vocab.size(), e.table.dim(), detail::derive_seed(c_.seed, 102));
    e.index_entities = c_.lstm_train_entities;
    return e;
  }

  fs::path model_path(const std::string& m) const {
    return c_.work() / "models" / (m == "lstm" ? "lstm.bin" : m + ".json");
  }

  fs::path train_lstm(const Dataset& data, const fs::path& dir) {
    auto enc = encoder(data);
    auto train_x = enc.encode_all(data.train);
    auto dev_x = enc.encode_all(data.dev);
    ModelConfig mc;
    mc.embedding_dim = enc.table.dim();
    mc.input_dim = mc.embedding_dim + kTypeColumns;
    mc.hidden = c_.lstm_hidden;
    mc.classes = data.vocab.size();
    mc.architecture = c_.lstm_architecture;
    mc.dropout = c_.lstm_dropout;
    mc.train_entities = c_.lstm_train_entities;
    Eigen::MatrixXd entity_init;
    if (mc.train_entities) {
      mc.entity_count = enc.entities.size();
      entity_init = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mc.entity_count), static_cast<Eigen::Index>(mc.embedding_dim));
      for (std::size_t i = 0; i < enc.entities.size(); ++i) {
        if (auto v = enc.table.phrase_vector(enc.entities.name(i))) {
          for (std::size_t k = 0; k < v->size(); ++k) entity_init(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (*v)[k];
        }
      }
    }
    auto model = init_model(mc, detail::derive_seed(c_.seed, 103), &enc.relations, mc.train_entities ? &entity_init : nullptr);
    TrainConfig tc;
    tc.batch_size = c_.lstm_batch;
    tc.epochs = c_.lstm_epochs;
    tc.seed = detail::derive_seed(c_.seed, 104);
    tc.learning_rate = c_.lstm_learning_rate;
    auto history = csrc::train(model, train_x, dev_x, tc);
    std::string hist = c_.header("lstm-history") + "\nepoch\ttrain_loss\tdev_accuracy\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
      hist += std::to_string(e + 1) + "\t" + detail::fixed(history.train_loss[e], 6) + "\t" +
              detail::fixed(history.dev_accuracy[e], 6) + "\n";
    }
    hist += "# best_epoch=" + std::to_string(history.best_epoch) + " best_dev_accuracy=" +
            detail::fixed(history.best_dev_accuracy, 6) + "\n";
    write_text(dir / "lstm_history.tsv", hist);
    auto path = dir / "lstm.bin";
    save_model_file(path.string(), model, data.vocab, mc.train_entities ? enc.entities : Vocabulary{}, c_.header("lstm-model"));
    log_ << "trained lstm -> lstm.bin (best dev accuracy " << detail::fixed(history.best_dev_accuracy) << " at epoch "
         << history.best_epoch << ")\n";
    return path;
  }

  std::pair<EvalReport, ConfusionMatrix> evaluate_model(const std::string& m, const Dataset& data, bool force) {
    auto path = model_path(m);
    if (!fs::exists(path)) throw DataError("missing artifact: " + path.string() + " (run `csrc train --model " + m + "` first)");
    auto check_hash = [&](const std::string& model_hash) {
      if (model_hash != data.config_hash && !force) {
        throw DataError("config hash of " + path.filename().string() + " (" + model_hash + ") differs from the dataset (" +
                        data.config_hash + "); rerun the stages or pass --force");
      }
    };
    if (m == "lstm") {
      auto saved = load_model_file(path.string());
      auto header = parse_header(saved.metadata);
      check_hash(header ? header->config_hash : std::string("unknown"));
      if (!(saved.relations == data.vocab)) throw DataError("lstm model vocabulary differs from the dataset vocabulary");
      auto enc = encoder(data);
      if (saved.model.config.train_entities) {
        enc.entities = saved.entities;
        enc.index_entities = true;
      } else {
        enc.index_entities = false;
      }
      auto test_x = enc.encode_all(data.test);
      auto preds = predict(saved.model, test_x);
      std::size_t i = 0;
      return csrc::evaluate([&](const ClozeExample&) { return preds[i++].label; }, data.test, data.vocab);
    }
    std::ifstream in(path);
    auto doc = nlohmann::json::parse(in);
    check_hash(doc.value("config_hash", std::string("unknown")));
    if (m == "random") {
      auto draws = predict_random(data.vocab.size(), detail::derive_seed(c_.seed, 105), data.test.size());
      std::size_t i = 0;
      return csrc::evaluate([&](const ClozeExample&) { return draws[i++]; }, data.test, data.vocab);
    }
    if (m == "unigram") {
      auto u = unigram_from_json(doc);
      return csrc::evaluate([&](const ClozeExample&) { return u.predict(); }, data.test, data.vocab);
    }
    if (m == "single") {
      auto s = single_from_json(doc);
      return csrc::evaluate([&](const ClozeExample& ex) { return s.predict(ex); }, data.test, data.vocab);
    }
    if (m == "forest") {
      auto f = forest_from_json(doc);
      auto enc = encoder(data);
      enc.index_entities = false;
      auto test_x = enc.encode_all(data.test);
      std::size_t i = 0;
      return csrc::evaluate([&](const ClozeExample&) { return f.predict(test_x[i++].flattened()); }, data.test, data.vocab);
    }
    throw UsageError("unknown model '" + m + "'");
  }

  Dataset load_dataset() const {
    auto dir = c_.work() / "dataset";
    Dataset d;
    for (const auto* name : {"train", "dev", "test"}) {
      auto path = dir / (std::string(name) + ".jsonl");
      if (!fs::exists(path)) throw DataError("missing artifact: " + path.string() + " (run `csrc build-dataset` first)");
      auto header = read_header(path);
      if (d.config_hash.empty()) d.config_hash = header.config_hash;
      std::ifstream in(path);
      auto xs = read_examples(in);
      (std::string(name) == "train" ? d.train : std::string(name) == "dev" ? d.dev : d.test) = std::move(xs);
    }
    auto vocab_lines = read_data_lines(dir / "vocab.txt");
    d.vocab = Vocabulary(vocab_lines);
    return d;
  }

  std::vector<std::pair<std::string, std::string>> read_pairs() const {
    if (c_.pairs.empty()) throw UsageError("config: 'pairs' is not set");
    auto path = c_.resolve(c_.pairs);
    std::ifstream in(path);
    if (!in) throw DataError("pairs file not found: " + path.string());
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::strip_cr(line);
      if (detail::trim(line).empty() || line.front() == '#') continue;
      auto f = detail::split(line, '\t');
      if (f.size() < 2) throw DataError("pairs file line " + std::to_string(line_no) + ": expected e1<TAB>e2");
      pairs.emplace_back(detail::trim(f[0]), detail::trim(f[1]));
    }
    return pairs;
  }

  std::vector<PairRecord> read_manifest(const fs::path& path, const std::string& producer) const {
    if (!fs::exists(path)) {
      throw DataError("missing artifact: " + path.string() + " (run `csrc " + producer + "` first)");
    }
    std::vector<PairRecord> records;
    auto lines = read_data_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {  // line 0 is the column header
      auto f = detail::split(lines[i], '\t');
      if (f.size() != 6) throw DataError("malformed manifest row in " + path.string());
      PairRecord r;
      r.index = std::stoul(std::string(f[0]));
      r.e1 = f[1];
      r.e2 = f[2];
      r.status = f[3];
      r.paths = std::stoul(std::string(f[4]));
      if (producer == "paths") {
        r.truncated = f[5] == "yes";
      } else {
        r.kept = std::stoul(std::string(f[5]));
      }
      records.push_back(r);
    }
    return records;
  }

  std::unordered_set<std::string> read_keep_list(const fs::path& path) const {
    if (!fs::exists(path)) throw DataError("keep-list not found: " + path.string());
    std::unordered_set<std::string> keep;
    for (const auto& line : read_data_lines(path)) keep.insert(std::string(detail::split(line, '\t').front()));
    return keep;
  }

  // Non-empty lines that are not '#' comments.
  static std::vector<std::string> read_data_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      detail::strip_cr(line);
      if (!line.empty() && line.front() != '#') lines.push_back(line);
    }
    return lines;
  }

  static std::string pair_file(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "pair_%05zu.tsv", index);
    return buf;
  }

  static void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
  }

  PipelineConfig c_;
  std::ostream& log_;
};

}  // namespace csrc
