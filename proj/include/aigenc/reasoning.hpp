#pragma once

// Reflective reasoning: match the current state graph against long-term memory,
// merge the matches, and complete the state graph with what it is missing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "aigenc/concept.hpp"
#include "aigenc/memory.hpp"
#include "aigenc/otmatch.hpp"

namespace aigenc {

struct ReasoningParams {
  double z = 0.8;
  /// Feature distance under which two nodes are the same concept; <= 0 means 0.05 * sqrt(M).
  double delta_merge = -1.0;
  OtParams ot{};

  double merge_radius(const Dims& dims) const {
    return delta_merge > 0.0 ? delta_merge : 0.05 * std::sqrt(static_cast<double>(dims.object));
  }
};

struct MatchEntry {
  GraphId graph_id = 0;
  ConceptGraph candidate;  // the stored graph or one of its ego subgraphs
  MatchResult match;
};

/// Matches with similarity >= z, most similar first.
struct MatchSet {
  std::vector<MatchEntry> entries;
  double z = 0.0;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }

  std::vector<ConceptGraph> graphs() const {
    std::vector<ConceptGraph> out;
    for (const auto& e : entries) out.push_back(e.candidate);
    return out;
  }
};

/// Nodes reachable in one hop from `center` on the undirected skeleton, with every edge among them.
inline ConceptGraph ego_subgraph(const ConceptGraph& g, NodeId center) {
  std::set<NodeId> keep{center};
  for (const auto& e : g.edges()) {
    if (e.src == center) keep.insert(e.dst);
    if (e.dst == center) keep.insert(e.src);
  }
  ConceptGraph out(g.dims());
  for (const auto& n : g.nodes())
    if (keep.count(n.id)) out.add_node_with_id(n.id, n.features, n.saliency, n.origin);
  for (const auto& e : g.edges())
    if (keep.count(e.src) && keep.count(e.dst)) out.add_edge(e.src, e.dst, e.affordance, e.origin);
  return out;
}

/// Observed nodes of g and the observed edges among them.
inline ConceptGraph observed_core(const ConceptGraph& g) {
  ConceptGraph out(g.dims());
  for (const auto& n : g.nodes())
    if (n.origin == Origin::observed) out.add_node_with_id(n.id, n.features, n.saliency, n.origin);
  for (const auto& e : g.edges())
    if (e.origin == Origin::observed && out.contains(e.src) && out.contains(e.dst))
      out.add_edge(e.src, e.dst, e.affordance, e.origin);
  return out;
}

/// Every stored graph and its radius-1 ego subgraphs, compared against g_t.
inline MatchSet selective_matching(const ConceptGraph& g_t, const MemoryStore& ltm, double z,
                                   const ReasoningParams& params = {}) {
  if (!(z > 0.0 && z <= 1.0)) throw std::invalid_argument("selective_matching: Z must be in (0,1]");
  MatchSet out;
  out.z = z;
  if (g_t.empty()) return out;
  const double max_distance = -params.ot.tau * std::log(z);

  for (const auto& stored : ltm.graphs()) {
    std::vector<ConceptGraph> candidates{stored.graph};
    std::set<std::set<NodeId>> seen;
    {
      std::set<NodeId> all;
      for (const auto& n : stored.graph.nodes()) all.insert(n.id);
      seen.insert(all);
    }
    for (const auto& n : stored.graph.nodes()) {
      ConceptGraph ego = ego_subgraph(stored.graph, n.id);
      std::set<NodeId> ids;
      for (const auto& m : ego.nodes()) ids.insert(m.id);
      if (seen.insert(ids).second) candidates.push_back(std::move(ego));
    }
    for (auto& c : candidates) {
      if (fgw_lower_bound(g_t, c, params.ot) > max_distance + 1e-12) continue;
      MatchResult m = fgw_distance(g_t, c, params.ot);
      if (m.similarity >= z) out.entries.push_back(MatchEntry{stored.id, std::move(c), std::move(m)});
    }
  }
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const MatchEntry& a, const MatchEntry& b) {
    return a.match.similarity > b.match.similarity;
  });
  return out;
}

/// Union of graphs. A node joins an existing union node when their features are
/// within delta_merge (at most one node per source graph per union node); the
/// merged node keeps the higher-saliency representative. Edges are remapped and
/// deduplicated. The first graph keeps its node ids.
inline ConceptGraph graph_union(const std::vector<ConceptGraph>& graphs, double delta_merge,
                                const Dims& fallback = {}) {
  if (graphs.empty()) return ConceptGraph(fallback);
  ConceptGraph out = graphs.front();
  for (std::size_t gi = 1; gi < graphs.size(); ++gi) {
    const ConceptGraph& g = graphs[gi];
    std::map<NodeId, NodeId> remap;
    std::set<NodeId> claimed;
    std::vector<ConceptNode> replaced;
    for (const auto& n : g.nodes()) {
      const ConceptNode* best = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& u : out.nodes()) {
        if (claimed.count(u.id)) continue;
        const double d = distance(n.features.view(), u.features.view());
        if (d <= delta_merge && d < best_d) {
          best = &u;
          best_d = d;
        }
      }
      if (best) {
        remap[n.id] = best->id;
        claimed.insert(best->id);
        if (n.saliency > best->saliency) replaced.push_back(ConceptNode{best->id, n.features, n.saliency, n.origin});
      } else {
        remap[n.id] = -1;
      }
    }
    // Rebuild so representatives can be swapped in without breaking ids.
    ConceptGraph next(out.dims());
    for (const auto& u : out.nodes()) {
      auto it = std::find_if(replaced.begin(), replaced.end(), [&](const ConceptNode& r) { return r.id == u.id; });
      const ConceptNode& src = it == replaced.end() ? u : *it;
      next.add_node_with_id(u.id, src.features, src.saliency, src.origin);
    }
    for (const auto& n : g.nodes())
      if (remap[n.id] < 0) remap[n.id] = next.add_node(n.features, n.saliency, n.origin);
    for (const auto& e : out.edges()) next.add_edge(e.src, e.dst, e.affordance, e.origin);
    for (const auto& e : g.edges()) next.add_edge(remap[e.src], remap[e.dst], e.affordance, e.origin);
    out = std::move(next);
  }
  return out;
}

/// g1 completed with the nodes and edges of g2 that it lacks. g2 nodes are
/// aligned onto g1 through the OT coupling; unaligned ones are copied in as
/// retrieved nodes. Nothing already in g1 is removed or changed.
inline ConceptGraph supplement(const ConceptGraph& g1, const ConceptGraph& g2, const ReasoningParams& params = {}) {
  ConceptGraph out = g1;
  if (g2.empty()) return out;
  const double radius = params.merge_radius(g1.dims());
  const std::size_t n1 = g1.node_count();
  const std::size_t n2 = g2.node_count();

  Coupling coupling;
  if (n1 > 0) coupling = fgw_distance(g1, g2, params.ot).coupling;
  const double min_mass = n1 > 0 ? 1.0 / (2.0 * static_cast<double>(n1 * n2)) : 0.0;

  std::map<NodeId, NodeId> align;
  for (std::size_t j = 0; j < n2; ++j) {
    const ConceptNode& b = g2.nodes()[j];
    std::optional<NodeId> target;
    if (n1 > 0) {
      Eigen::Index i = 0;
      const double mass = coupling.plan.col(static_cast<Eigen::Index>(j)).maxCoeff(&i);
      const ConceptNode& a = g1.nodes()[static_cast<std::size_t>(i)];
      if (mass >= min_mass && distance(a.features.view(), b.features.view()) <= radius) target = a.id;
      if (!target) {
        // the coupling spread this node elsewhere; accept the nearest g1 node inside the merge radius
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n1; ++k) {
          const double d = distance(g1.nodes()[k].features.view(), b.features.view());
          if (d <= radius && d < best) {
            best = d;
            target = g1.nodes()[k].id;
          }
        }
      }
    }
    align[b.id] = target ? *target : out.add_node(b.features, b.saliency, Origin::retrieved);
  }
  for (const auto& e : g2.edges()) out.add_edge(align[e.src], align[e.dst], e.affordance, Origin::retrieved);
  return out;
}

/// Completes g_t with the union of its LTM matches. Matching uses the observed
/// core of g_t, so enhancing an already enhanced graph changes nothing.
inline ConceptGraph enhance(const ConceptGraph& g_t, const MemoryStore& ltm, double z,
                            const ReasoningParams& params = {}, MatchSet* matches = nullptr) {
  MatchSet ms = selective_matching(observed_core(g_t), ltm, z, params);
  ConceptGraph out = ms.empty() ? g_t : supplement(g_t, graph_union(ms.graphs(), params.merge_radius(g_t.dims()), g_t.dims()), params);
  if (matches) *matches = std::move(ms);
  return out;
}

}  // namespace aigenc
