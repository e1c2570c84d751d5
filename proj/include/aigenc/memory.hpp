#pragma once

// Working memory and long-term memory.
//
// Both stores keep graphs in the object-list + affordance-map encoding and an
// episode graph recording visits. Working memory lives for one episode: every
// step either stores a new graph or records a revisit of a similar one. At the
// end of the episode the stored graphs are clustered on their pooled
// embeddings and the medoid of each cluster is offered to long-term memory,
// which keeps only graphs that are not near-duplicates of what it already has.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aigenc/concept.hpp"
#include "aigenc/graph_json.hpp"
#include "aigenc/kmeans.hpp"
#include "aigenc/otmatch.hpp"

namespace aigenc {

enum class MemoryKind { working, long_term };

inline std::string_view to_string(MemoryKind k) { return k == MemoryKind::working ? "WM" : "LTM"; }

struct StoredGraph {
  GraphId id = 0;
  AdjacencyLists encoding;
  ConceptGraph graph;  // materialised view of `encoding`

  friend bool operator==(const StoredGraph& a, const StoredGraph& b) { return a.id == b.id && a.graph == b.graph; }
};

class MemoryStore {
 public:
  explicit MemoryStore(MemoryKind kind = MemoryKind::long_term, Dims dims = {}) : kind_(kind), dims_(dims) {}

  MemoryKind kind() const { return kind_; }
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return graphs_.size(); }
  bool empty() const { return graphs_.empty(); }
  const std::vector<StoredGraph>& graphs() const { return graphs_; }
  const EpisodeGraph& episode_graph() const { return episode_graph_; }
  EpisodeGraph& episode_graph() { return episode_graph_; }

  GraphId insert(const ConceptGraph& g) { return insert_with_id(next_id_, g); }

  GraphId insert_with_id(GraphId id, const ConceptGraph& g) {
    if (find(id)) throw std::invalid_argument("memory: duplicate graph id " + std::to_string(id));
    graphs_.push_back(StoredGraph{id, to_adjacency_lists(g), g});
    next_id_ = std::max(next_id_, id + 1);
    return id;
  }

  const StoredGraph* find(GraphId id) const {
    for (const auto& s : graphs_)
      if (s.id == id) return &s;
    return nullptr;
  }

  const ConceptGraph& graph(GraphId id) const {
    const StoredGraph* s = find(id);
    if (!s) throw std::out_of_range("memory: no graph with id " + std::to_string(id));
    return s->graph;
  }

  void replace(GraphId id, const ConceptGraph& g) {
    for (auto& s : graphs_)
      if (s.id == id) {
        s.encoding = to_adjacency_lists(g);
        s.graph = g;
        return;
      }
    throw std::out_of_range("memory: no graph with id " + std::to_string(id));
  }

  /// Working-memory reset between episodes. Ids keep increasing.
  void clear() {
    graphs_.clear();
    episode_graph_.clear();
  }

  friend bool operator==(const MemoryStore& a, const MemoryStore& b) {
    return a.kind_ == b.kind_ && a.dims_ == b.dims_ && a.graphs_ == b.graphs_ && a.episode_graph_ == b.episode_graph_;
  }

 private:
  MemoryKind kind_;
  Dims dims_;
  std::vector<StoredGraph> graphs_;
  EpisodeGraph episode_graph_;
  GraphId next_id_ = 0;
};

struct MemoryParams {
  double z_dup = 0.995;
  std::size_t k = 4;
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-8;
  OtParams ot{};
};

struct BestMatch {
  GraphId id = 0;
  MatchResult match;
};

/// Most similar stored graph whose similarity reaches `threshold`, if any.
/// Graphs whose lower bound already rules them out are skipped.
inline std::optional<BestMatch> best_match(const MemoryStore& store, const ConceptGraph& g, double threshold,
                                           const OtParams& ot) {
  std::optional<BestMatch> best;
  const double max_distance = -ot.tau * std::log(threshold);
  for (const auto& s : store.graphs()) {
    if (fgw_lower_bound(g, s.graph, ot) > max_distance + 1e-12) continue;
    MatchResult m = fgw_distance(g, s.graph, ot);
    if (m.similarity < threshold) continue;
    if (!best || m.similarity > best->match.similarity) best = BestMatch{s.id, std::move(m)};
  }
  return best;
}

/// True iff some stored graph has similarity >= z_dup with g.
inline bool memory_matching(const MemoryStore& store, const ConceptGraph& g, double z_dup, const OtParams& ot = {}) {
  if (!(z_dup > 0.0 && z_dup <= 1.0)) throw std::invalid_argument("memory_matching: z_dup must be in (0,1]");
  return best_match(store, g, z_dup, ot).has_value();
}

namespace detail {

/// Copies edges of `g` that the stored graph lacks, mapping each node of g to
/// the stored node receiving most of its coupling mass.
inline ConceptGraph merge_edges(const ConceptGraph& stored, const ConceptGraph& g, const Coupling& coupling) {
  ConceptGraph out = stored;
  if (coupling.plan.rows() != static_cast<Eigen::Index>(g.node_count()) ||
      coupling.plan.cols() != static_cast<Eigen::Index>(stored.node_count()))
    return out;
  auto map_node = [&](NodeId id) {
    Eigen::Index j = 0;
    coupling.plan.row(static_cast<Eigen::Index>(*g.index_of(id))).maxCoeff(&j);
    return stored.nodes()[static_cast<std::size_t>(j)].id;
  };
  for (const auto& e : g.edges()) out.add_edge(map_node(e.src), map_node(e.dst), e.affordance);
  return out;
}

}  // namespace detail

/// Stores g unless a near-duplicate exists; records the visit either way.
/// Returns the graph id the visit points at.
inline GraphId wm_insert(MemoryStore& wm, const ConceptGraph& g, double reward, std::int64_t t,
                         const MemoryParams& params, std::int64_t episode = 0) {
  if (wm.kind() != MemoryKind::working) throw std::invalid_argument("wm_insert: store is not a working memory");
  GraphId id;
  if (auto hit = best_match(wm, g, params.z_dup, params.ot)) {
    id = hit->id;
    ConceptGraph merged = detail::merge_edges(wm.graph(id), g, hit->match.coupling);
    if (merged.edge_count() != wm.graph(id).edge_count()) wm.replace(id, merged);
  } else {
    id = wm.insert(g);
  }
  wm.episode_graph().append(StateNode{id, reward, Label::unlabeled, episode, t});
  return id;
}

/// A cluster representative taken from working memory.
struct Centroid {
  GraphId source_id = 0;
  ConceptGraph graph;
  std::int64_t first_t = 0;  // first visit in the episode chain
  double reward = 0.0;       // reward at that visit
};

/// k-means over pooled graph embeddings; the medoid (stored graph nearest its
/// cluster centroid) of every non-empty cluster, in order of first visit.
inline std::vector<Centroid> extract_centroids(const MemoryStore& wm, std::size_t k, std::uint64_t seed,
                                               const MemoryParams& params = {}) {
  if (k == 0) throw std::invalid_argument("extract_centroids: k must be >= 1");
  std::vector<Centroid> out;
  if (wm.empty()) return out;
  std::vector<std::vector<double>> points;
  for (const auto& s : wm.graphs()) points.push_back(graph_embed(s.graph).values());
  const KMeansResult km = kmeans(points, KMeansParams{k, params.kmeans_max_iter, params.kmeans_tol, seed});

  for (std::size_t c = 0; c < km.centroids.size(); ++c) {
    const auto members = km.members(c);
    if (members.empty()) continue;
    std::size_t medoid = members.front();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : members) {
      const double d = squared_distance(points[i], km.centroids[c]);
      if (d < best) {
        best = d;
        medoid = i;
      }
    }
    const StoredGraph& s = wm.graphs()[medoid];
    Centroid cen{s.id, s.graph, std::numeric_limits<std::int64_t>::max(), 0.0};
    for (const auto& v : wm.episode_graph().state_nodes)
      if (v.graph_id == s.id && v.t < cen.first_t) {
        cen.first_t = v.t;
        cen.reward = v.reward;
      }
    if (cen.first_t == std::numeric_limits<std::int64_t>::max()) cen.first_t = static_cast<std::int64_t>(medoid);
    out.push_back(std::move(cen));
  }
  std::stable_sort(out.begin(), out.end(), [](const Centroid& a, const Centroid& b) {
    return a.first_t != b.first_t ? a.first_t < b.first_t : a.source_id < b.source_id;
  });
  return out;
}

struct EpisodeMeta {
  std::int64_t episode = 0;
  bool success = false;
};

/// Inserts the non-duplicate centroids, labels their state nodes with the
/// episode outcome and chains them in visit order. Returns the new graph ids.
inline std::vector<GraphId> ltm_update(MemoryStore& ltm, const std::vector<Centroid>& centroids,
                                       const EpisodeMeta& meta, const MemoryParams& params) {
  if (ltm.kind() != MemoryKind::long_term) throw std::invalid_argument("ltm_update: store is not a long-term memory");
  std::vector<GraphId> added;
  for (const auto& c : centroids) {
    if (memory_matching(ltm, c.graph, params.z_dup, params.ot)) continue;
    const GraphId id = ltm.insert(c.graph);
    ltm.episode_graph().append(
        StateNode{id, c.reward, meta.success ? Label::one : Label::zero, meta.episode, c.first_t});
    added.push_back(id);
  }
  return added;
}

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr int kSnapshotVersion = 1;

inline json to_json(const MemoryStore& store) {
  json graphs = json::array();
  for (const auto& s : store.graphs()) {
    json g = to_json(s.graph);
    g["id"] = s.id;
    graphs.push_back(std::move(g));
  }
  return json{{"version", kSnapshotVersion},
              {"kind", std::string(to_string(store.kind()))},
              {"dims", {{"object", store.dims().object}, {"action", store.dims().action}}},
              {"graphs", std::move(graphs)},
              {"episode_graph", to_json(store.episode_graph())}};
}

inline MemoryStore memory_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kSnapshotVersion)
      throw ParseError("unsupported snapshot version " + j.at("version").dump(), 0);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "WM" && kind != "LTM") throw ParseError("unknown memory kind '" + kind + "'", 0);
    const Dims dims{j.at("dims").at("object").get<std::size_t>(), j.at("dims").at("action").get<std::size_t>()};
    MemoryStore store(kind == "WM" ? MemoryKind::working : MemoryKind::long_term, dims);
    for (const auto& g : j.at("graphs")) store.insert_with_id(g.at("id").get<GraphId>(), graph_from_json(g, dims));
    store.episode_graph() = episode_graph_from_json(j.at("episode_graph"));
    for (const auto& n : store.episode_graph().state_nodes)
      if (!store.find(n.graph_id))
        throw ParseError("episode graph references unknown graph " + std::to_string(n.graph_id), 0);
    return store;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed snapshot: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed snapshot: ") + e.what(), 0);
  }
}

inline std::string snapshot_text(const MemoryStore& store) { return to_json(store).dump() + "\n"; }

inline void snapshot_save(const MemoryStore& store, const std::string& path) { write_text_file(path, snapshot_text(store)); }

inline MemoryStore snapshot_load(const std::string& path) {
  return memory_from_json(parse_json_text(read_text_file(path)));
}

}  // namespace aigenc
