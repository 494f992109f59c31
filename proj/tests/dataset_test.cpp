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

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "support.hpp"

namespace csrc {
namespace {

std::vector<std::string> tokens(const ClozeExample& ex) {
  std::vector<std::string> out;
  for (const auto& s : ex.slots) out.push_back(s.kind == SlotKind::Pad ? "-" : s.token);
  return out;
}

std::vector<RelationPath> one_path(const KnowledgeGraph& g, const char* a, const char* b) {
  return enumerate_paths(g, g.concept_id(a), g.concept_id(b)).paths;
}

TEST(BuildExamples, SizeThreeFollowsInterleavedLayout) {
  auto g = testing::graph_from("createdby\tchild\thavesex\ncauses\thavesex\tbaby\natlocation\tbaby\tcradle\n");
  auto paths = one_path(g, "child", "cradle");
  ASSERT_EQ(paths.size(), 1u);
  auto xs = build_examples(g, paths);
  ASSERT_EQ(xs.size(), 3u);
  using V = std::vector<std::string>;
  EXPECT_EQ(tokens(xs[0]), (V{"child", "cradle", "havesex", "-", "-", "-"}));
  EXPECT_EQ(xs[0].target, "createdby");
  EXPECT_EQ(tokens(xs[1]), (V{"child", "cradle", "baby", "havesex", "createdby", "-"}));
  EXPECT_EQ(xs[1].target, "causes");
  EXPECT_EQ(tokens(xs[2]), (V{"child", "cradle", "baby", "causes", "havesex", "createdby"}));
  EXPECT_EQ(xs[2].target, "atlocation");
  EXPECT_EQ(xs[2].slots[2].kind, SlotKind::Intermediate);
  EXPECT_EQ(xs[2].slots[3].kind, SlotKind::Relation);
  EXPECT_EQ(xs[2].position, 3);
  EXPECT_EQ(xs[2].pair, (std::pair<std::string, std::string>{"child", "cradle"}));
}

TEST(BuildExamples, SizeOneAndTwo) {
  auto g = testing::graph_from("isa\tcat\tanimal\nhasa\tcat\ttail\npartof\ttail\tanimal\n");
  auto paths = one_path(g, "cat", "animal");
  ASSERT_EQ(paths.size(), 2u);
  auto xs = build_examples(g, paths);
  ASSERT_EQ(xs.size(), 3u);
  using V = std::vector<std::string>;
  EXPECT_EQ(tokens(xs[0]), (V{"cat", "animal", "-", "-", "-", "-"}));
  EXPECT_EQ(xs[0].target, "isa");
  EXPECT_EQ(tokens(xs[1]), (V{"cat", "animal", "tail", "-", "-", "-"}));
  EXPECT_EQ(xs[1].target, "hasa");
  EXPECT_EQ(tokens(xs[2]), (V{"cat", "animal", "tail", "hasa", "-", "-"}));
  EXPECT_EQ(xs[2].target, "partof");
  EXPECT_EQ(xs[2].input_length(), 4u);

  RelationPath empty;
  empty.concepts = {g.concept_id("cat")};
  EXPECT_THROW(build_examples(g, {empty}), UsageError);
}

TEST(BuildExamples, CountConservationAndHeldOutPosition) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = testing::graph_from(testing::to_tsv(testing::random_edges(rng, 14, 45)));
    std::vector<RelationPath> paths;
    for (std::uint32_t b = 1; b < g.concept_count(); ++b) {
      auto r = enumerate_paths(g, ConceptId{0}, ConceptId{b});
      paths.insert(paths.end(), r.paths.begin(), r.paths.end());
    }
    auto xs = build_examples(g, paths);
    // Independent recount from the rendered text: a path of size k has 2k slashes.
    std::size_t expected = 0;
    for (const auto& p : paths) {
      auto text = render_path(g, p);
      expected += static_cast<std::size_t>(std::count(text.begin(), text.end(), '/')) / 2;
    }
    EXPECT_EQ(xs.size(), expected);
    for (const auto& x : xs) {
      std::vector<std::string> rels;
      bool padding = false;
      for (const auto& s : x.slots) {
        if (s.kind == SlotKind::Relation) rels.push_back(s.token);
        if (s.kind == SlotKind::Pad) padding = true;
        else EXPECT_FALSE(padding);
      }
      // The inputs hold exactly the relations before the held-out one.
      EXPECT_EQ(rels.size(), static_cast<std::size_t>(x.position - 1));
      auto path = parse_path_line(g, x.source);
      std::multiset<std::string> before, shown(rels.begin(), rels.end());
      for (int i = 0; i + 1 < x.position; ++i) before.insert(g.relation_name(path.relations[static_cast<std::size_t>(i)]));
      EXPECT_EQ(shown, before);
      EXPECT_EQ(x.target, g.relation_name(path.relations[static_cast<std::size_t>(x.position - 1)]));
    }
  }
}

std::vector<ClozeExample> single_example_paths(std::size_t n) {
  std::string tsv;
  for (std::size_t i = 0; i < n; ++i) tsv += "r\ta" + std::to_string(i) + "\tb" + std::to_string(i) + "\n";
  auto g = testing::graph_from(tsv);
  std::vector<RelationPath> paths;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = enumerate_paths(g, g.concept_id("a" + std::to_string(i)), g.concept_id("b" + std::to_string(i)));
    paths.push_back(r.paths.at(0));
  }
  return build_examples(g, paths);
}

TEST(Split, HundredSingletons) {
  auto xs = single_example_paths(100);
  auto s = split(xs, 7);
  EXPECT_EQ(s.train.size(), 57u);
  EXPECT_EQ(s.dev.size(), 18u);
  EXPECT_EQ(s.test.size(), 25u);
  EXPECT_EQ(s.seed, 7u);

  auto again = split(xs, 7);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.dev, s.dev);
  EXPECT_EQ(again.test, s.test);
  EXPECT_NE(split(xs, 8).test, s.test);
}

TEST(Split, DisjointCoveringAndGroupedBySource) {
  std::mt19937_64 rng(8);
  auto g = testing::graph_from(testing::to_tsv(testing::random_edges(rng, 20, 70)));
  std::vector<RelationPath> paths;
  for (std::uint32_t b = 1; b < g.concept_count(); ++b) {
    auto r = enumerate_paths(g, ConceptId{0}, ConceptId{b});
    paths.insert(paths.end(), r.paths.begin(), r.paths.end());
  }
  auto xs = build_examples(g, paths);
  ASSERT_GT(xs.size(), 20u);
  auto s = split(xs, 3);
  EXPECT_EQ(s.train.size() + s.dev.size() + s.test.size(), xs.size());
  std::map<std::string, int> where;
  auto mark = [&](const std::vector<ClozeExample>& part, int id) {
    for (const auto& x : part) {
      auto [it, fresh] = where.try_emplace(x.source, id);
      EXPECT_EQ(it->second, id) << "source split across partitions: " << x.source;
    }
  };
  mark(s.train, 0);
  mark(s.dev, 1);
  mark(s.test, 2);
}

TEST(Split, TooFewExamples) {
  EXPECT_THROW(split(single_example_paths(2), 1), DataError);
  EXPECT_THROW(split(single_example_paths(10), 1, 0.0), UsageError);
}

struct EncodingFixture : ::testing::Test {
  KnowledgeGraph g = testing::graph_from("createdby\tchild\thavesex\ncauses\thavesex\tbaby\natlocation\tbaby\tcradle\n");
  std::vector<ClozeExample> xs = build_examples(g, one_path(g, "child", "cradle"));
  Vocabulary vocab = relation_vocabulary(g, one_path(g, "child", "cradle"));
};

TEST_F(EncodingFixture, ShapesAndPadding) {
  for (std::size_t d : {300u, 30u}) {
    auto t = random_table({"child", "cradle", "baby", "havesex"}, d, 1);
    auto rel = RelationEmbedder::random(vocab.size(), d, 2);
    auto e = encode(xs[0], t, rel, vocab);
    EXPECT_EQ(e.features.rows(), 6);
    EXPECT_EQ(e.features.cols(), static_cast<Eigen::Index>(d + 3));
    for (Eigen::Index r = 3; r < 6; ++r) EXPECT_TRUE(e.features.row(r).isZero(0.0));
    EXPECT_EQ(e.label, static_cast<int>(vocab.index("createdby")));
  }
  EXPECT_EQ(xs.size(), 3u);
}

TEST_F(EncodingFixture, RowsCarryVectorsAndTypeFlags) {
  const std::size_t d = 4;
  auto t = random_table({"child", "cradle", "havesex"}, d, 5);  // "baby" is OOV
  auto rel = RelationEmbedder::random(vocab.size(), d, 6);
  auto e = encode(xs[2], t, rel, vocab);
  const auto di = static_cast<Eigen::Index>(d);
  auto child = *t.vector("child");
  for (std::size_t i = 0; i < d; ++i) EXPECT_EQ(e.features(0, static_cast<Eigen::Index>(i)), child[i]);
  EXPECT_EQ(e.features.row(0).tail(3), Eigen::RowVector3d(1, 0, 0));
  EXPECT_TRUE(e.features.row(2).head(di).isZero(0.0));  // OOV intermediate
  EXPECT_EQ(e.features.row(2).tail(3), Eigen::RowVector3d(0, 1, 0));
  EXPECT_EQ(e.features.row(3).head(di), rel.vectors.row(static_cast<Eigen::Index>(vocab.index("causes"))));
  EXPECT_EQ(e.features.row(3).tail(3), Eigen::RowVector3d(0, 0, 1));
  EXPECT_EQ(e.relation_index[3], static_cast<int>(vocab.index("causes")));
  EXPECT_EQ(e.relation_index[5], static_cast<int>(vocab.index("createdby")));
  for (auto r : e.relation_index) EXPECT_NE(r, e.label);
}

TEST_F(EncodingFixture, ScalingAWordVectorScalesOnlyItsEntries) {
  const std::size_t d = 5;
  auto t = random_table({"child", "cradle", "baby", "havesex"}, d, 9);
  auto rel = RelationEmbedder::random(vocab.size(), d, 10);
  auto doubled = t;
  doubled.scale("baby", 2.0);
  for (const auto& x : xs) {
    auto a = encode(x, t, rel, vocab), b = encode(x, doubled, rel, vocab);
    for (Eigen::Index r = 0; r < 6; ++r) {
      const bool is_baby = x.slots[static_cast<std::size_t>(r)].token == "baby";
      for (Eigen::Index c = 0; c < a.features.cols(); ++c) {
        const double want = is_baby && c < static_cast<Eigen::Index>(d) ? 2.0 * a.features(r, c) : a.features(r, c);
        EXPECT_EQ(b.features(r, c), want);
      }
    }
  }
}

TEST_F(EncodingFixture, DimMismatch) {
  auto t = random_table({"child"}, 4, 1);
  EXPECT_THROW(encode(xs[0], t, RelationEmbedder::random(vocab.size(), 5, 1), vocab), UsageError);
}

TEST_F(EncodingFixture, JsonLinesRoundTrip) {
  std::stringstream buf;
  write_examples(buf, xs);
  EXPECT_EQ(read_examples(buf), xs);

  std::stringstream empty;
  write_examples(empty, {});
  EXPECT_TRUE(empty.str().empty());
  EXPECT_TRUE(read_examples(empty).empty());

  std::stringstream good;
  write_examples(good, xs);
  std::stringstream broken(good.str() + "{\"slots\": []}\n");
  try {
    read_examples(broken);
    ADD_FAILURE();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos) << e.what();
  }
}

TEST(Examples, LargeRoundTripIsStable) {
  std::mt19937_64 rng(21);
  auto g = testing::graph_from(testing::to_tsv(testing::random_edges(rng, 25, 110)));
  std::vector<RelationPath> paths;
  for (std::uint32_t a = 0; a < 4; ++a) {
    for (std::uint32_t b = 0; b < g.concept_count(); ++b) {
      if (a == b) continue;
      auto r = enumerate_paths(g, ConceptId{a}, ConceptId{b});
      paths.insert(paths.end(), r.paths.begin(), r.paths.end());
    }
  }
  auto xs = build_examples(g, paths);
  ASSERT_GT(xs.size(), 1000u);
  std::stringstream first;
  write_examples(first, xs);
  auto back = read_examples(first);
  std::stringstream second;
  write_examples(second, back);
  EXPECT_EQ(std::hash<std::string>{}(first.str()), std::hash<std::string>{}(second.str()));
  EXPECT_EQ(back, xs);
}

}  // namespace
}  // namespace csrc
