#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace aigenc;
using fixtures::node_graph;

namespace {

const Dims kDims{};

void add_labeled(MemoryStore& s, const ConceptGraph& g, Label label, std::int64_t episode = 0) {
  const GraphId id = s.insert(g);
  s.episode_graph().append(StateNode{id, 0.0, label, episode, static_cast<std::int64_t>(s.size())});
}

FeatureVector at_node_similarity(double target) {
  return fixtures::unit(12, 0, std::sqrt(-std::log(target) * 12.0));
}

// label is the sign of dimension 3; the other dimensions are noise
MemoryStore sign_of_dim3(std::mt19937_64& rng, int n) {
  MemoryStore s(MemoryKind::long_term, kDims);
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (int i = 0; i < n; ++i) {
    FeatureVector f = fixtures::random_features(rng, 12);
    std::vector<double> v = f.values();
    const bool one = i % 2 == 0;
    v[3] = (one ? 1.0 : -1.0) + jitter(rng);
    add_labeled(s, node_graph(FeatureVector(v)), one ? Label::one : Label::zero, i);
  }
  return s;
}

// mean drop in leave-one-out nearest-centroid accuracy when column d is shuffled
std::vector<double> shift_importance_oracle(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  auto accuracy = [&](const std::vector<std::vector<double>>& pts) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      int pred = -1;
      for (int c = 0; c < 2; ++c) {
        std::vector<double> mean(pts[i].size(), 0.0);
        std::size_t count = 0;
        for (std::size_t j = 0; j < pts.size(); ++j)
          if (j != i && y[j] == c) {
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += pts[j][d];
            ++count;
          }
        if (count == 0) continue;
        double dist = 0.0;
        for (std::size_t d = 0; d < mean.size(); ++d) dist += std::pow(pts[i][d] - mean[d] / count, 2);
        if (dist < best) {
          best = dist;
          pred = c;
        }
      }
      correct += pred == y[i];
    }
    return static_cast<double>(correct) / pts.size();
  };
  const double base = accuracy(x);
  std::vector<double> out;
  for (std::size_t d = 0; d < x.front().size(); ++d) {
    std::mt19937 rng(static_cast<unsigned>(d) + 100);
    double drop = 0.0;
    for (int r = 0; r < 10; ++r) {
      std::vector<std::size_t> perm(x.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      auto shuffled = x;
      for (std::size_t i = 0; i < x.size(); ++i) shuffled[i][d] = x[perm[i]][d];
      drop += base - accuracy(shuffled);
    }
    out.push_back(drop / 10);
  }
  return out;
}

ConceptGraph state_graph(const WorldState& s) {
  return create_state_graph(SymbolicEncoder().object_discovery(s), ActionEncodingTable::generate(4, 0), kDims);
}

WorldState picked_up(Task task) { return step(reset(task, 0), EnvAction{ActionKind::pickup, 0, {}}).state; }

// states of picking up the first object and carrying it east, labelled by task
MemoryStore carried_trajectories() {
  MemoryStore s(MemoryKind::long_term, kDims);
  for (Task t : {Task::BaseKeyDoor, Task::ImpasseTool}) {
    const Label label = t == Task::BaseKeyDoor ? Label::one : Label::zero;
    WorldState w = reset(t, 0);
    add_labeled(s, state_graph(w), label);
    w = step(w, EnvAction{ActionKind::pickup, 0, {}}).state;
    for (int i = 0; i < 6 && !w.done(); ++i) {
      add_labeled(s, state_graph(w), label);
      w = step(w, EnvAction{ActionKind::east, {}, {}}).state;
    }
  }
  return s;
}

}  // namespace

TEST(DetectImpasse, Examples) {
  ImpasseTracker t(5);
  for (int i = 0; i < 4; ++i) EXPECT_FALSE(detect_impasse(t, false));
  EXPECT_TRUE(detect_impasse(t, false));
  EXPECT_TRUE(detect_impasse(t, false));
  EXPECT_FALSE(detect_impasse(t, true));
  EXPECT_EQ(t.consecutive_failures(), 0u);
  ImpasseTracker one(1);
  EXPECT_TRUE(detect_impasse(one, false));
  EXPECT_THROW(ImpasseTracker(0), std::invalid_argument);
}

TEST(BlendCandidates, Band) {
  const ConceptGraph g = node_graph(FeatureVector(12));
  BlendingParams p;
  MemoryStore s(MemoryKind::long_term, kDims);
  s.insert(node_graph(at_node_similarity(0.9)));
  s.insert(node_graph(at_node_similarity(0.6)));
  const auto c = select_blend_candidates(g, s, p);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0].similarity, 0.6, 1e-9);
  EXPECT_EQ(*c[0].remembered.ltm_graph, 1);
  EXPECT_FALSE(c[0].current.ltm_graph.has_value());

  MemoryStore same(MemoryKind::long_term, kDims);
  same.insert(g);
  EXPECT_TRUE(select_blend_candidates(g, same, p).empty());
  EXPECT_THROW(select_blend_candidates(g, s, BlendingParams{0.9, 0.8}), std::invalid_argument);
}

TEST(FeatureSaliency, UniformWithoutBothLabels) {
  MemoryStore s(MemoryKind::long_term, kDims);
  for (int i = 0; i < 5; ++i) add_labeled(s, node_graph(fixtures::unit(12, static_cast<std::size_t>(i))), Label::one, i);
  for (double w : feature_saliency(s, 0)) EXPECT_EQ(w, 0.5);
}

TEST(FeatureSaliency, FindsTheDiscriminativeDimension) {
  std::mt19937_64 rng(19);
  for (int f = 0; f < 5; ++f) {
    const MemoryStore s = sign_of_dim3(rng, 40);
    const std::vector<double> w = feature_saliency(s, static_cast<std::uint64_t>(f));
    ASSERT_EQ(w.size(), 12u);
    for (double v : w) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(std::max_element(w.begin(), w.end()) - w.begin(), 3);
    const auto data = detail::labeled_ltm_nodes(s);
    const auto oracle = shift_importance_oracle(data.x, data.y);
    EXPECT_EQ(std::max_element(oracle.begin(), oracle.end()) - oracle.begin(), 3);
  }
}

TEST(Blend, Examples) {
  const FeatureVector a{1, 2, 3}, b{3, 2, 1};
  EXPECT_EQ(blend(a, b, {1, 1, 1}), a);
  EXPECT_EQ(blend(a, b, {0, 0, 0}), b);
  EXPECT_EQ(blend(a, b, {0.5, 0.5, 0.5}), (FeatureVector{2, 2, 2}));
  EXPECT_THROW(blend(a, FeatureVector{1, 2}, {0.5, 0.5, 0.5}), std::invalid_argument);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const FeatureVector x = fixtures::random_features(rng, 12), y = fixtures::random_features(rng, 12);
    std::vector<double> w(12);
    for (auto& v : w) v = u(rng);
    const FeatureVector c = blend(x, y, w);
    for (std::size_t d = 0; d < 12; ++d) {
      EXPECT_GE(c[d], std::min(x[d], y[d]) - 1e-12);
      EXPECT_LE(c[d], std::max(x[d], y[d]) + 1e-12);
    }
  }
}

TEST(AcceptBlend, Examples) {
  MemoryStore s(MemoryKind::long_term, kDims);
  for (int i = 0; i < 6; ++i) s.insert(node_graph(fixtures::unit(12, static_cast<std::size_t>(i % 3), 0.2 * i)));
  const BlendingParams p;
  EXPECT_TRUE(accept_blend(s.graphs()[0].graph.nodes()[0].features, s, -1.0, p));
  const ConceptClusters clusters(s, p, 0);
  const double delta = clusters.covering_radius();
  ASSERT_GT(delta, 0.0);
  const FeatureVector far = fixtures::unit(12, 7, 10.0 * delta + 2.0);
  EXPECT_FALSE(accept_blend(far, clusters, delta));
  EXPECT_TRUE(accept_blend(far, clusters, std::numeric_limits<double>::infinity()));
  EXPECT_FALSE(accept_blend(far, MemoryStore(MemoryKind::long_term, kDims), 1.0));
}

TEST(Inject, InheritsEdgesOfBothParents) {
  ConceptGraph g(kDims);
  for (int i = 0; i < 5; ++i) g.add_node(fixtures::unit(12, static_cast<std::size_t>(i)), 0.1 * i, Origin::observed);
  const Affordance aff{FeatureVector(4, 0.5), FeatureVector(12), 0.0};
  g.add_edge(0, 2, aff);
  g.add_edge(1, 3, aff);
  g.add_edge(4, 1, aff);
  const BlendParent a{std::nullopt, 0, g.node(0).features, g.node(0).saliency};
  const BlendParent b{std::nullopt, 1, g.node(1).features, g.node(1).saliency};
  const ConceptGraph out = inject(g, FeatureVector(12, 0.5), a, b);
  EXPECT_EQ(out.node_count(), g.node_count() + 1);
  const NodeId fresh = out.nodes().back().id;
  EXPECT_EQ(out.nodes().back().origin, Origin::blended);
  EXPECT_DOUBLE_EQ(out.nodes().back().saliency, 0.1);
  std::size_t incident = 0;
  for (const auto& e : out.edges()) incident += e.src == fresh || e.dst == fresh;
  EXPECT_EQ(incident, 3u);
  for (const auto& e : g.edges()) EXPECT_TRUE(out.has_edge(e.src, e.dst, e.affordance.action));

  ConceptGraph shared(kDims);
  for (int i = 0; i < 3; ++i) shared.add_node(fixtures::unit(12, static_cast<std::size_t>(i)), 0.5, Origin::observed);
  shared.add_edge(0, 2, aff);
  shared.add_edge(1, 2, aff);
  const ConceptGraph merged = inject(shared, FeatureVector(12), BlendParent{std::nullopt, 0, {}, 0.5},
                                     BlendParent{std::nullopt, 1, {}, 0.5});
  EXPECT_EQ(merged.edge_count(), 3u);
}

TEST(RunBlending, EmptyMemoryLeavesGraphUnchanged) {
  std::mt19937_64 rng(1);
  const ConceptGraph g = fixtures::random_graph(rng, 3);
  const BlendingReport r = run_blending(g, MemoryStore(MemoryKind::long_term, kDims), BlendingParams{}, 0);
  EXPECT_EQ(r.result, g);
  EXPECT_EQ(r.injected(), 0u);
}

TEST(RunBlending, StickAndRememberedKeyYieldADoorOpeningConcept) {
  const MemoryStore s = carried_trajectories();
  const ConceptGraph g_t = state_graph(picked_up(Task::ImpasseTool));
  const BlendingParams p;
  const BlendingReport r = run_blending(g_t, s, p, 7);
  ASSERT_GT(r.injected(), 0u);
  const FeatureVector proto = SymbolicEncoder().key_prototype();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : r.result.nodes())
    if (n.origin == Origin::blended) best = std::min(best, distance(n.features.view(), proto.view()));
  EXPECT_LE(best, EnvConfig{}.delta_env);

  const BlendingReport again = run_blending(g_t, s, p, 7);
  EXPECT_EQ(again.result, r.result);
  EXPECT_EQ(again.weights, r.weights);
}
