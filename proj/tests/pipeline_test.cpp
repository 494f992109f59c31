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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace csrc {
namespace {

namespace fs = std::filesystem;

const fs::path kToy = fs::path(CSRC_SOURCE_DIR) / "data" / "toy";

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("csrc_pipeline_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig toy(const fs::path& work) {
  auto c = load_config(kToy / "toy.conf");
  c.workdir = work.string();
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Data rows of a manifest (header comment and column line dropped).
std::vector<std::vector<std::string>> manifest_rows(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::getline(in, line);
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, '\t')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CSRC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, ParsesKeysAndResolvesRelativePaths) {
  std::istringstream in(
      "# comment\n"
      "edges = e.tsv\n"
      "vectors=/abs/v.txt\n"
      "\n"
      "seed = 42\n"
      "lstm_hidden = 8, 4\n"
      "lstm_architecture = recurrent-dense\n"
      "strategy = all-pairs\n"
      "direction = directed\n");
  auto c = parse_config(in, "/base");
  EXPECT_EQ(c.resolve(c.edges), fs::path("/base/e.tsv"));
  EXPECT_EQ(c.resolve(c.vectors), fs::path("/abs/v.txt"));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.lstm_hidden, (std::vector<std::size_t>{8, 4}));
  EXPECT_EQ(c.strategy, ScoringStrategy::AllPairs);
  EXPECT_EQ(c.direction, DirectionMode::Directed);

  std::istringstream unknown("edge = x\n");
  EXPECT_THROW(parse_config(unknown), UsageError);
  std::istringstream bad_number("seed = 4x\n");
  EXPECT_THROW(parse_config(bad_number), UsageError);
  std::istringstream no_equals("seed 4\n");
  EXPECT_THROW(parse_config(no_equals), UsageError);
  EXPECT_THROW(load_config("/nonexistent/csrc.conf"), UsageError);
}

TEST(Config, HashCoversSettingsButNotWorkdir) {
  auto a = toy("/tmp/a"), b = toy("/tmp/b");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.seed += 1;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.lstm_hidden = {16, 9};
  EXPECT_NE(a.hash(), b.hash());
  auto h = parse_header(a.header("paths"));
  ASSERT_TRUE(h);
  EXPECT_EQ(h->kind, "paths");
  EXPECT_EQ(h->config_hash, a.hash());
  EXPECT_EQ(h->seed, 7u);
  EXPECT_FALSE(parse_header("# something else"));
}

TEST(Convert, BothConceptNetLayouts) {
  std::istringstream in(
      "/a/[/r/AtLocation/,/c/en/milk/,/c/en/fridge/]\t/r/AtLocation\t/c/en/milk\t/c/en/fridge/n\t/ctx/all\t2.5\tx\n"
      "/a/[...]\t/r/IsA\t/c/en/dog/n/animal\t/c/en/animal\t{\"dataset\": \"/d/x\", \"weight\": 0.75}\n"
      "/a/[...]\t/r/Antonym\t/c/fr/chaud\t/c/en/cold\t{\"weight\": 1.0}\n"
      "/a/[...]\t/r/NotDesires\t/c/en/cat\t/c/en/bath\t/ctx/all\t-1\tx\n"
      "/a/[...]\t/r/dbpedia/genre\t/c/en/jazz\t/c/en/music\t{}\n"
      "short\trow\n");
  std::ostringstream out;
  auto stats = convert_conceptnet(in, out);
  EXPECT_EQ(stats.rows, 6u);
  EXPECT_EQ(stats.kept, 3u);
  EXPECT_EQ(stats.skipped, 3u);
  EXPECT_EQ(out.str(),
            "atlocation\tmilk\tfridge\t2.5\n"
            "isa\tdog\tanimal\t0.75\n"
            "genre\tjazz\tmusic\t1\n");
  std::istringstream edges(out.str());
  EXPECT_EQ(load_edges(edges).edge_count(), 3u);
}

TEST(Pipeline, SmallGraphSummary) {
  auto dir = scratch("summary");
  write_file(dir / "e.tsv", "isa\tcat\tanimal\natlocation\tcat\thouse\nusedfor\thouse\tliving\n");
  std::istringstream in("edges = e.tsv\nworkdir = w\n");
  std::ostringstream log;
  Pipeline p(parse_config(in, dir), log);
  EXPECT_EQ(p.ingest(), "4 concepts, 3 relations, 3 edges");
  EXPECT_EQ(p.ingest(), "4 concepts, 3 relations, 3 edges");
  EXPECT_EQ(read_file(dir / "w" / "graph_summary.txt").substr(0, 7), "# csrc ");
}

TEST(Pipeline, ToyRunMatchesLibraryResults) {
  auto work = scratch("toy");
  auto config = toy(work);
  std::ostringstream log;
  testing::run_pipeline(config, log);

  auto g = load_edges_file(config.resolve(config.edges).string());
  auto table = load_word_vectors_file(config.resolve(config.vectors).string());
  auto paths = manifest_rows(work / "paths" / "manifest.tsv");
  auto filtered = manifest_rows(work / "filtered" / "manifest.tsv");
  ASSERT_EQ(paths.size(), 10u);
  ASSERT_EQ(filtered.size(), 10u);
  std::size_t total_kept = 0;
  std::vector<RelationPath> kept_paths;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& row = paths[i];
    auto a = g.find_concept(row[1]), b = g.find_concept(row[2]);
    if (!a || !b) {
      EXPECT_EQ(row[3], "skipped:unknown-concept");
      continue;
    }
    if (*a == *b) {
      EXPECT_EQ(row[3], "skipped:same-concept");
      continue;
    }
    EXPECT_EQ(row[3], "ok");
    auto found = enumerate_paths(g, *a, *b).paths;
    EXPECT_EQ(row[4], std::to_string(found.size())) << row[1] << " " << row[2];
    std::vector<ScoredPath> scored;
    for (const auto& p : found) scored.push_back(score_path(table, g, p, config.strategy));
    auto outcome = filter_paths(scored);
    EXPECT_EQ(filtered[i][4], row[4]);
    EXPECT_EQ(filtered[i][5], std::to_string(outcome.kept.size()));
    total_kept += outcome.kept.size();
    for (const auto& s : outcome.kept) kept_paths.push_back(s.path);
  }
  EXPECT_EQ(paths[7][3], "skipped:unknown-concept");
  EXPECT_EQ(paths[8][3], "skipped:same-concept");
  EXPECT_GT(total_kept, 0u);

  std::size_t examples = 0;
  for (const char* part : {"train", "dev", "test"}) {
    std::istringstream in(read_file(work / "dataset" / (std::string(part) + ".jsonl")));
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(parse_header(header)->kind, std::string("examples-") + part);
    examples += read_examples(in).size();
  }
  EXPECT_EQ(examples, build_examples(g, kept_paths).size());

  for (const auto& m : model_names()) {
    std::ifstream in(work / "reports" / (m + ".json"));
    auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j.at("config_hash"), config.hash());
    EXPECT_GE(j.at("accuracy").get<double>(), 0.0);
    EXPECT_LE(j.at("accuracy").get<double>(), 1.0);
  }
  auto metrics = read_file(work / "reports" / "metrics.txt");
  for (const char* m : {"random", "unigram", "single", "forest", "lstm"}) {
    EXPECT_NE(metrics.find("| " + std::string(m) + " "), std::string::npos) << metrics;
  }
  EXPECT_NE(metrics.find("| Method  | Recall | Precision | F1 Score | Accuracy |"), std::string::npos) << metrics;

  for (const auto& [name, bytes] : testing::snapshot(work)) {
    if (name.ends_with(".json")) {
      EXPECT_NE(bytes.find("\"config_hash\""), std::string::npos) << name;
    } else if (name.ends_with(".bin")) {
      EXPECT_NE(bytes.find(config.header("lstm-model")), std::string::npos) << name;
    } else {
      EXPECT_EQ(bytes.rfind("# csrc ", 0), 0u) << name;
    }
  }
}

TEST(Pipeline, RerunIsByteIdentical) {
  auto a = scratch("rerun_a"), b = scratch("rerun_b");
  std::ostringstream log;
  testing::run_pipeline(toy(a), log);
  testing::run_pipeline(toy(b), log);
  auto sa = testing::snapshot(a), sb = testing::snapshot(b);
  EXPECT_GT(sa.size(), 20u);
  EXPECT_TRUE(sa == sb);
}

TEST(Pipeline, EmptyPairsGiveEmptyOutputs) {
  auto dir = scratch("empty");
  write_file(dir / "pairs.tsv", "# e1\te2\n");
  auto config = toy(dir / "w");
  config.pairs = (dir / "pairs.tsv").string();
  std::ostringstream log;
  Pipeline p(config, log);
  EXPECT_TRUE(p.paths().empty());
  EXPECT_TRUE(p.filter().empty());
  EXPECT_TRUE(manifest_rows(dir / "w" / "filtered" / "manifest.tsv").empty());
}

TEST(Pipeline, StageOrderAndHashChecks) {
  auto work = scratch("order");
  std::ostringstream log;
  Pipeline p(toy(work), log);
  try {
    p.filter();
    ADD_FAILURE();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("missing artifact"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("csrc paths"), std::string::npos) << e.what();
  }
  EXPECT_THROW(p.build_dataset(), DataError);
  EXPECT_THROW(p.train("unigram"), DataError);
  EXPECT_THROW(p.report(), DataError);

  testing::run_pipeline(toy(work), log);
  auto reseeded = toy(work);
  reseeded.seed = 9;
  Pipeline q(reseeded, log);
  EXPECT_THROW(q.evaluate({"unigram"}), DataError);
  EXPECT_NO_THROW(q.evaluate({"unigram"}, true));
  EXPECT_THROW(q.train("nonsense"), UsageError);
}

TEST(Cli, ExitCodes) {
  auto work = scratch("cli");
  const std::string conf = "--config " + (kToy / "toy.conf").string() + " --workdir " + work.string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("ingest"), 1);
  EXPECT_EQ(run_cli("ingest --config /nonexistent.conf"), 1);
  EXPECT_EQ(run_cli("filter " + conf), 2);
  EXPECT_EQ(run_cli("ingest " + conf), 0);
  EXPECT_EQ(run_cli("paths " + conf), 0);
  EXPECT_EQ(run_cli("filter --strategy bogus " + conf), 1);
  EXPECT_EQ(run_cli("filter " + conf), 0);
  EXPECT_EQ(run_cli("build-dataset " + conf), 0);
  EXPECT_EQ(run_cli("train --model unigram --model single " + conf), 0);
  EXPECT_EQ(run_cli("train --model nope " + conf), 1);
  EXPECT_EQ(run_cli("evaluate " + conf), 0);
  EXPECT_EQ(run_cli("evaluate --seed 9 " + conf), 2);
  EXPECT_EQ(run_cli("evaluate --seed 9 --force " + conf), 0);
  EXPECT_EQ(run_cli("report " + conf), 0);
  EXPECT_TRUE(fs::exists(work / "reports" / "summary.txt"));

  auto dir = scratch("cli_empty");
  write_file(dir / "pairs.tsv", "");
  write_file(dir / "c.conf", "edges = " + (kToy / "edges.tsv").string() + "\nvectors = " + (kToy / "vectors.txt").string() +
                                 "\npairs = pairs.tsv\nworkdir = w\n");
  EXPECT_EQ(run_cli("paths --config " + (dir / "c.conf").string()), 0);
  EXPECT_EQ(run_cli("filter --config " + (dir / "c.conf").string()), 0);
}

}  // namespace
}  // namespace csrc
