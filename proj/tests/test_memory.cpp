#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"

using namespace aigenc;
using fixtures::node_graph;

namespace {

const MemoryParams kMem{};

MemoryStore wm() { return MemoryStore(MemoryKind::working, Dims{}); }
MemoryStore ltm() { return MemoryStore(MemoryKind::long_term, Dims{}); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("aigenc_test_" + name)).string();
}

}  // namespace

TEST(MemoryMatching, Examples) {
  std::mt19937_64 rng(1);
  const ConceptGraph g = fixtures::random_graph(rng, 4);
  EXPECT_FALSE(memory_matching(ltm(), g, 0.995));
  MemoryStore s = ltm();
  s.insert(g);
  EXPECT_TRUE(memory_matching(s, g, 0.995));
  EXPECT_THROW(memory_matching(s, g, 0.0), std::invalid_argument);
}

TEST(MemoryMatching, PairAtNinetyPercentIsNotDuplicate) {
  // single-node graphs: the structure term vanishes and the oracle distance is
  // (1 - alpha) * |a - b|^2 / M, so pick |a - b|^2 to land on similarity 0.90
  const double alpha = kMem.ot.alpha;
  const double target = -std::log(0.90);
  const double sq = target * 12.0 / (1.0 - alpha);
  FeatureVector a(12), b(12);
  b[0] = std::sqrt(sq);
  const double oracle = std::exp(-(1.0 - alpha) * sq / 12.0);
  ASSERT_NEAR(oracle, 0.90, 1e-9);
  const MatchResult m = fgw_distance(node_graph(a), node_graph(b));
  EXPECT_NEAR(m.similarity, oracle, 0.01);
  MemoryStore s = ltm();
  s.insert(node_graph(b));
  EXPECT_FALSE(memory_matching(s, node_graph(a), 0.995));
}

TEST(WmInsert, DuplicateRecordsVisitOnly) {
  std::mt19937_64 rng(2);
  const ConceptGraph g = fixtures::random_graph(rng, 3);
  MemoryStore w = wm();
  const GraphId first = wm_insert(w, g, 0.0, 0, kMem);
  const GraphId second = wm_insert(w, g, -0.01, 1, kMem);
  EXPECT_EQ(first, second);
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(w.episode_graph().state_nodes.size(), 2u);
}

TEST(WmInsert, DissimilarGraphsBothStoredAndChainIsMonotone) {
  MemoryStore w = wm();
  wm_insert(w, node_graph(fixtures::unit(12, 0)), 0.0, 0, kMem);
  wm_insert(w, node_graph(fixtures::unit(12, 1, 3.0)), 0.0, 1, kMem);
  wm_insert(w, node_graph(fixtures::unit(12, 2, 3.0)), 0.0, 2, kMem);
  EXPECT_EQ(w.size(), 3u);
  std::vector<std::int64_t> ts;
  for (const auto& n : w.episode_graph().state_nodes) ts.push_back(n.t);
  EXPECT_EQ(ts, (std::vector<std::int64_t>{0, 1, 2}));
  MemoryStore l = ltm();
  EXPECT_THROW(wm_insert(l, node_graph(FeatureVector(12)), 0, 0, kMem), std::invalid_argument);
}

TEST(WmInsert, DuplicateMergesNewEdges) {
  ConceptGraph g(Dims{});
  g.add_node(fixtures::unit(12, 0), 0.5, Origin::observed);
  g.add_node(fixtures::unit(12, 1), 0.5, Origin::observed);
  ConceptGraph with_edge = g;
  with_edge.add_edge(0, 1, Affordance{FeatureVector(4, 0.5), FeatureVector(12), 0.0});
  // with the structure term off the two graphs are duplicates
  MemoryParams features_only;
  features_only.ot.alpha = 0.0;
  MemoryStore w = wm();
  wm_insert(w, g, 0.0, 0, features_only);
  wm_insert(w, with_edge, 0.0, 1, features_only);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w.graphs()[0].graph.edge_count(), 1u);
}

TEST(ExtractCentroids, SmallCases) {
  EXPECT_TRUE(extract_centroids(wm(), 3, 0).empty());
  MemoryStore one = wm();
  wm_insert(one, node_graph(fixtures::unit(12, 0)), 0.0, 0, kMem);
  const auto c1 = extract_centroids(one, 3, 0);
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_EQ(c1[0].graph, one.graphs()[0].graph);

  MemoryStore four = wm();
  for (int i = 0; i < 4; ++i) wm_insert(four, node_graph(fixtures::unit(12, static_cast<std::size_t>(i), 2.0)), 0.0, i, kMem);
  ASSERT_EQ(four.size(), 4u);
  EXPECT_EQ(extract_centroids(four, 4, 0).size(), 4u);
  EXPECT_THROW(extract_centroids(four, 0, 0), std::invalid_argument);
}

TEST(ExtractCentroids, MatchesBruteForceMedoids) {
  std::mt19937_64 rng(77);
  for (int f = 0; f < 20; ++f) {
    const auto blobs = fixtures::planted_blobs(rng, 12, 3 + rng() % 4, 3 + rng() % 4, 0.1, 10.0);
    MemoryStore w = wm();
    for (const auto& p : blobs.points) w.insert(node_graph(FeatureVector(p)));
    const auto expected = fixtures::optimal_two_partition_medoids(blobs.points);
    std::vector<std::size_t> got;
    for (const auto& c : extract_centroids(w, 2, static_cast<std::uint64_t>(f))) got.push_back(static_cast<std::size_t>(c.source_id));
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, expected) << "fixture " << f;
  }
}

TEST(LtmUpdate, LabelsDedupAndChains) {
  MemoryStore w = wm();
  for (int i = 0; i < 3; ++i) wm_insert(w, node_graph(fixtures::unit(12, static_cast<std::size_t>(i), 2.0)), 0.0, i, kMem);
  const auto cents = extract_centroids(w, 4, 0);
  MemoryStore l = ltm();
  const auto added = ltm_update(l, cents, EpisodeMeta{0, true}, kMem);
  EXPECT_EQ(added.size(), 3u);
  for (const auto& n : l.episode_graph().state_nodes) EXPECT_EQ(n.label, Label::one);
  EXPECT_EQ(l.episode_graph().temporal_edges.size(), 2u);
  EXPECT_TRUE(ltm_update(l, cents, EpisodeMeta{1, false}, kMem).empty());
  EXPECT_EQ(l.size(), 3u);
  EXPECT_THROW(ltm_update(w, cents, EpisodeMeta{}, kMem), std::invalid_argument);
}

TEST(Snapshot, RoundTrips) {
  const std::string path = temp_path("snap.json");
  snapshot_save(ltm(), path);
  EXPECT_EQ(snapshot_load(path), ltm());

  std::mt19937_64 rng(4);
  MemoryStore l = ltm();
  for (int i = 0; i < 10; ++i) {
    const GraphId id = l.insert(fixtures::random_graph(rng, 1 + rng() % 5));
    l.episode_graph().append(StateNode{id, -0.01, i % 2 ? Label::one : Label::zero, i / 3, i % 3});
  }
  snapshot_save(l, path);
  EXPECT_EQ(snapshot_load(path), l);
  std::filesystem::remove(path);
}

TEST(Snapshot, TruncatedFileIsParseError) {
  std::mt19937_64 rng(4);
  MemoryStore l = ltm();
  l.insert(fixtures::random_graph(rng, 3));
  const std::string text = snapshot_text(l);
  const std::string path = temp_path("trunc.json");
  write_text_file(path, text.substr(0, text.size() / 2));
  try {
    snapshot_load(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte(), 0u);
  }
  std::filesystem::remove(path);
}
