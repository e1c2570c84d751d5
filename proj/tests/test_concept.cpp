#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace aigenc;
using fixtures::random_graph;

namespace {

const Dims kDims{};

Affordance aff(double a0, double reward = 0.0) {
  FeatureVector action(kDims.action);
  action[0] = a0;
  return Affordance{action, FeatureVector(kDims.object), reward};
}

}  // namespace

TEST(ConceptNode, FirstNodeGetsIdZero) {
  ConceptGraph g(kDims);
  EXPECT_EQ(add_concept_node(g, FeatureVector(kDims.object), 0.5, Origin::observed), 0);
  EXPECT_EQ(g.node_count(), 1u);
}

TEST(ConceptNode, IdenticalFeaturesGetDistinctIds) {
  ConceptGraph g(kDims);
  const FeatureVector f(kDims.object, 0.3);
  const NodeId a = add_concept_node(g, f, 0.5, Origin::observed);
  const NodeId b = add_concept_node(g, f, 0.5, Origin::observed);
  EXPECT_NE(a, b);
  EXPECT_EQ(g.node_count(), 2u);
}

TEST(ConceptNode, RejectsBadInput) {
  ConceptGraph g(kDims);
  EXPECT_THROW(add_concept_node(g, FeatureVector(kDims.object), 1.2, Origin::observed), std::invalid_argument);
  EXPECT_THROW(add_concept_node(g, FeatureVector(kDims.object + 1), 0.5, Origin::observed), std::invalid_argument);
  FeatureVector nan(kDims.object);
  nan[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(add_concept_node(g, nan, 0.5, Origin::observed), std::invalid_argument);
  EXPECT_EQ(g.node_count(), 0u);
}

TEST(AffordanceEdge, AddsAndDeduplicates) {
  ConceptGraph g(kDims);
  const NodeId a = g.add_node(FeatureVector(kDims.object), 0.5, Origin::observed);
  const NodeId b = g.add_node(FeatureVector(kDims.object), 0.5, Origin::observed);
  g = add_affordance_edge(g, a, b, aff(1.0));
  EXPECT_EQ(g.edge_count(), 1u);
  g = add_affordance_edge(g, a, b, aff(1.0, 0.7));
  EXPECT_EQ(g.edge_count(), 1u);
  g = add_affordance_edge(g, a, b, aff(-1.0));
  EXPECT_EQ(g.edge_count(), 2u);
  g = add_affordance_edge(g, a, a, aff(1.0));
  EXPECT_EQ(g.edge_count(), 3u);
}

TEST(AffordanceEdge, MissingEndpointRejected) {
  ConceptGraph g(kDims);
  const NodeId a = g.add_node(FeatureVector(kDims.object), 0.5, Origin::observed);
  EXPECT_THROW(add_affordance_edge(g, 7, a, aff(1.0)), std::invalid_argument);
  EXPECT_THROW(add_affordance_edge(g, a, 7, aff(1.0)), std::invalid_argument);
}

TEST(AdjacencyLists, EmptyGraph) {
  const AdjacencyLists l = to_adjacency_lists(ConceptGraph(kDims));
  EXPECT_TRUE(l.objects.empty());
  EXPECT_TRUE(l.affordances.empty());
}

TEST(AdjacencyLists, ObjectMapsToNeighbourTuples) {
  ConceptGraph g(kDims);
  const NodeId o1 = g.add_node(FeatureVector(kDims.object, 0.1), 0.5, Origin::observed);
  const NodeId o2 = g.add_node(FeatureVector(kDims.object, 0.2), 0.5, Origin::observed);
  g.add_edge(o1, o2, aff(1.0, 0.25));
  const AdjacencyLists l = to_adjacency_lists(g);
  ASSERT_EQ(l.objects.size(), 2u);
  ASSERT_EQ(l.affordances.at(o1).size(), 1u);
  EXPECT_EQ(l.affordances.at(o1)[0].neighbor, o2);
  EXPECT_EQ(l.affordances.at(o1)[0].affordance, aff(1.0, 0.25));
  EXPECT_TRUE(l.affordances.at(o2).empty());
}

TEST(AdjacencyLists, RoundTripOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const ConceptGraph g = random_graph(rng, 1 + rng() % 8, kDims, 0.4);
    EXPECT_EQ(from_adjacency_lists(to_adjacency_lists(g)), g);
  }
}

TEST(GraphEmbed, EmptyGraphIsZero) {
  const FeatureVector e = graph_embed(ConceptGraph(kDims));
  ASSERT_EQ(e.size(), 2 * kDims.object + kDims.action + 3);
  for (double v : e) EXPECT_EQ(v, 0.0);
}

TEST(GraphEmbed, SingleNode) {
  std::mt19937_64 rng(3);
  const FeatureVector v = fixtures::random_features(rng, kDims.object);
  const FeatureVector e = graph_embed(fixtures::node_graph(v));
  for (std::size_t i = 0; i < kDims.object; ++i) EXPECT_EQ(e[i], v[i]);
  for (std::size_t i = kDims.object; i < 2 * kDims.object + kDims.action; ++i) EXPECT_EQ(e[i], 0.0);
  const std::size_t c = 2 * kDims.object + kDims.action;
  EXPECT_EQ(e[c], 1.0);
  EXPECT_EQ(e[c + 1], 0.0);
  EXPECT_EQ(e[c + 2], 0.0);
}

TEST(GraphEmbed, PermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const ConceptGraph g = random_graph(rng, 2 + rng() % 6, kDims, 0.4);
    const ConceptGraph h = fixtures::permuted(g, fixtures::random_permutation(rng, g.node_count()));
    const FeatureVector a = graph_embed(g);
    const FeatureVector b = graph_embed(h);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(GraphJson, BitExactRoundTrip) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const ConceptGraph g = random_graph(rng, rng() % 7, kDims, 0.5);
    const std::string text = to_json(g).dump();
    const ConceptGraph back = graph_from_json(parse_json_text(text), kDims);
    EXPECT_EQ(back, g);
    EXPECT_EQ(to_json(back).dump(), text);
  }
}

TEST(GraphJson, MalformedTextReportsOffset) {
  try {
    parse_json_text("{\"nodes\": [1, 2,");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte(), 0u);
  }
}

TEST(EpisodeGraph, ChainReconstructsVisitOrder) {
  EpisodeGraph eg;
  eg.append(StateNode{4, 0.0, Label::unlabeled, 0, 0});
  eg.append(StateNode{9, 0.0, Label::unlabeled, 1, 0});
  eg.append(StateNode{5, 0.0, Label::unlabeled, 0, 1});
  eg.append(StateNode{4, 1.0, Label::unlabeled, 0, 2});
  std::vector<GraphId> order;
  for (const auto& n : eg.episode_chain(0)) order.push_back(n.graph_id);
  EXPECT_EQ(order, (std::vector<GraphId>{4, 5, 4}));
  auto edges = eg.temporal_edges;
  std::sort(edges.begin(), edges.end(), [](const TemporalEdge& a, const TemporalEdge& b) { return a.t < b.t; });
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0].from, 4);
  EXPECT_EQ(edges[0].to, 5);
  EXPECT_EQ(edges[1].to, 4);
  EXPECT_THROW(eg.append(StateNode{1, 0.0, Label::unlabeled, 0, 2}), std::invalid_argument);
}
