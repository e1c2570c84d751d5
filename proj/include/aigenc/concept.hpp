#pragma once

// Hierarchical concept space.
//
//   Layer 0  FeatureVector   latent coordinates of one object or one action
//   Layer 1  ConceptGraph    nodes = object concepts, edges = affordances
//   Layer 2  EpisodeGraph    nodes = stored state graphs, edges = temporal succession

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace aigenc {

using NodeId = std::int64_t;
using GraphId = std::int64_t;

/// Configured latent sizes: M for objects, P for actions.
struct Dims {
  std::size_t object = 12;
  std::size_t action = 4;

  /// Size of the pooled graph descriptor, 2M + P + 3.
  std::size_t embed() const { return 2 * object + action + 3; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}
  FeatureVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> view() const { return values_; }
  const std::vector<double>& values() const { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
  friend auto operator<=>(const FeatureVector& a, const FeatureVector& b) { return a.values_ <=> b.values_; }

 private:
  std::vector<double> values_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

enum class Origin { observed, retrieved, blended };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::observed: return "observed";
    case Origin::retrieved: return "retrieved";
    case Origin::blended: return "blended";
  }
  return "observed";
}

inline Origin origin_from_string(std::string_view s) {
  if (s == "observed") return Origin::observed;
  if (s == "retrieved") return Origin::retrieved;
  if (s == "blended") return Origin::blended;
  throw std::invalid_argument("unknown node origin '" + std::string(s) + "'");
}

struct ConceptNode {
  NodeId id = 0;
  FeatureVector features;
  double saliency = 0.0;
  Origin origin = Origin::observed;

  friend bool operator==(const ConceptNode&, const ConceptNode&) = default;
};

/// (action encoding, effect, reward) relating an actor concept to the concept it acted on.
struct Affordance {
  FeatureVector action;
  FeatureVector effect;
  double reward = 0.0;

  friend bool operator==(const Affordance&, const Affordance&) = default;
};

struct ConceptEdge {
  NodeId src = 0;
  NodeId dst = 0;
  Affordance affordance;
  Origin origin = Origin::observed;

  friend bool operator==(const ConceptEdge&, const ConceptEdge&) = default;
};

/// Directed graph of object concepts. Self-loops are allowed.
///
/// A ConceptGraph is a value: copy it, mutate the copy. Node ids are
/// instance-scoped, so two nodes with identical features still get distinct ids.
class ConceptGraph {
 public:
  ConceptGraph() = default;
  explicit ConceptGraph(Dims dims) : dims_(dims) {}

  const Dims& dims() const { return dims_; }
  const std::vector<ConceptNode>& nodes() const { return nodes_; }
  const std::vector<ConceptEdge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Appends a node with a fresh id.
  NodeId add_node(FeatureVector features, double saliency, Origin origin) {
    return add_node_with_id(next_id_, std::move(features), saliency, origin);
  }

  /// Appends a node with a caller-chosen id (used by decoders). Throws on duplicates.
  NodeId add_node_with_id(NodeId id, FeatureVector features, double saliency, Origin origin) {
    if (features.size() != dims_.object)
      throw std::invalid_argument("concept node: expected " + std::to_string(dims_.object) +
                                  " features, got " + std::to_string(features.size()));
    if (!features.all_finite()) throw std::invalid_argument("concept node: non-finite feature value");
    if (!(saliency >= 0.0 && saliency <= 1.0))
      throw std::invalid_argument("concept node: saliency " + std::to_string(saliency) + " outside [0,1]");
    if (contains(id)) throw std::invalid_argument("concept node: duplicate id " + std::to_string(id));
    nodes_.push_back(ConceptNode{id, std::move(features), saliency, origin});
    next_id_ = std::max(next_id_, id + 1);
    return id;
  }

  /// Adds a directed affordance edge. Returns false if an edge with the same
  /// (src, dst, action) already exists; the graph is unchanged in that case.
  bool add_edge(NodeId src, NodeId dst, Affordance aff, Origin origin = Origin::observed) {
    if (!contains(src)) throw std::invalid_argument("affordance edge: unknown source node " + std::to_string(src));
    if (!contains(dst)) throw std::invalid_argument("affordance edge: unknown target node " + std::to_string(dst));
    if (aff.action.size() != dims_.action)
      throw std::invalid_argument("affordance edge: action encoding has wrong dimension");
    if (aff.effect.size() != dims_.object)
      throw std::invalid_argument("affordance edge: effect has wrong dimension");
    if (!aff.action.all_finite() || !aff.effect.all_finite() || !std::isfinite(aff.reward))
      throw std::invalid_argument("affordance edge: non-finite payload");
    if (has_edge(src, dst, aff.action)) return false;
    edges_.push_back(ConceptEdge{src, dst, std::move(aff), origin});
    return true;
  }

  bool has_edge(NodeId src, NodeId dst, const FeatureVector& action) const {
    return std::any_of(edges_.begin(), edges_.end(), [&](const ConceptEdge& e) {
      return e.src == src && e.dst == dst && e.affordance.action == action;
    });
  }

  bool contains(NodeId id) const { return index_of(id).has_value(); }

  std::optional<std::size_t> index_of(NodeId id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].id == id) return i;
    return std::nullopt;
  }

  const ConceptNode& node(NodeId id) const {
    auto i = index_of(id);
    if (!i) throw std::out_of_range("no node with id " + std::to_string(id));
    return nodes_[*i];
  }

  /// Structural equality: same dims, same nodes in order, same edge set.
  friend bool operator==(const ConceptGraph& a, const ConceptGraph& b) {
    if (a.dims_ != b.dims_ || a.nodes_ != b.nodes_ || a.edges_.size() != b.edges_.size()) return false;
    return sorted_edges(a.edges_) == sorted_edges(b.edges_);
  }

 private:
  static std::vector<ConceptEdge> sorted_edges(std::vector<ConceptEdge> edges) {
    std::sort(edges.begin(), edges.end(), [](const ConceptEdge& x, const ConceptEdge& y) {
      return std::tie(x.src, x.dst, x.affordance.action, x.affordance.effect, x.affordance.reward, x.origin) <
             std::tie(y.src, y.dst, y.affordance.action, y.affordance.effect, y.affordance.reward, y.origin);
    });
    return edges;
  }

  Dims dims_{};
  std::vector<ConceptNode> nodes_;
  std::vector<ConceptEdge> edges_;
  NodeId next_id_ = 0;
};

inline NodeId add_concept_node(ConceptGraph& graph, FeatureVector features, double saliency, Origin origin) {
  return graph.add_node(std::move(features), saliency, origin);
}

inline ConceptGraph add_affordance_edge(ConceptGraph graph, NodeId src, NodeId dst, Affordance aff,
                                        Origin origin = Origin::observed) {
  graph.add_edge(src, dst, std::move(aff), origin);
  return graph;
}

/// Object list + affordance map encoding: one record per node in id order, and
/// for every node the (neighbor, affordance) tuples of its outgoing edges.
/// Nodes without outgoing edges still get an (empty) entry.
struct AdjacencyLists {
  struct Link {
    NodeId neighbor = 0;
    Affordance affordance;
    Origin origin = Origin::observed;
    friend bool operator==(const Link&, const Link&) = default;
  };

  Dims dims{};
  std::vector<ConceptNode> objects;
  std::map<NodeId, std::vector<Link>> affordances;

  friend bool operator==(const AdjacencyLists&, const AdjacencyLists&) = default;
};

inline AdjacencyLists to_adjacency_lists(const ConceptGraph& graph) {
  AdjacencyLists out;
  out.dims = graph.dims();
  out.objects = graph.nodes();
  std::stable_sort(out.objects.begin(), out.objects.end(),
                   [](const ConceptNode& a, const ConceptNode& b) { return a.id < b.id; });
  for (const auto& n : out.objects) out.affordances[n.id];
  for (const auto& e : graph.edges()) out.affordances[e.src].push_back({e.dst, e.affordance, e.origin});
  return out;
}

inline ConceptGraph from_adjacency_lists(const AdjacencyLists& lists) {
  ConceptGraph g(lists.dims);
  for (const auto& n : lists.objects) g.add_node_with_id(n.id, n.features, n.saliency, n.origin);
  for (const auto& [src, outgoing] : lists.affordances)
    for (const auto& link : outgoing) g.add_edge(src, link.neighbor, link.affordance, link.origin);
  return g;
}

/// Pooled descriptor of length 2M+P+3:
/// [mean node features, mean edge effect, mean edge action, node count, edge count, mean edge reward].
inline FeatureVector graph_embed(const ConceptGraph& graph) {
  const Dims& d = graph.dims();
  std::vector<double> out(d.embed(), 0.0);
  const std::size_t effect_at = d.object;
  const std::size_t action_at = 2 * d.object;
  const std::size_t counts_at = 2 * d.object + d.action;

  if (!graph.nodes().empty()) {
    for (const auto& n : graph.nodes())
      for (std::size_t i = 0; i < d.object; ++i) out[i] += n.features[i];
    for (std::size_t i = 0; i < d.object; ++i) out[i] /= static_cast<double>(graph.node_count());
  }
  if (!graph.edges().empty()) {
    double reward = 0.0;
    for (const auto& e : graph.edges()) {
      for (std::size_t i = 0; i < d.object; ++i) out[effect_at + i] += e.affordance.effect[i];
      for (std::size_t i = 0; i < d.action; ++i) out[action_at + i] += e.affordance.action[i];
      reward += e.affordance.reward;
    }
    const double m = static_cast<double>(graph.edge_count());
    for (std::size_t i = effect_at; i < counts_at; ++i) out[i] /= m;
    out[counts_at + 2] = reward / m;
  }
  out[counts_at] = static_cast<double>(graph.node_count());
  out[counts_at + 1] = static_cast<double>(graph.edge_count());
  return FeatureVector(std::move(out));
}

// ---------------------------------------------------------------------------
// Layer 2

enum class Label { zero, one, unlabeled };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::zero: return "0";
    case Label::one: return "1";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

inline Label label_from_string(std::string_view s) {
  if (s == "0") return Label::zero;
  if (s == "1") return Label::one;
  if (s == "unlabeled") return Label::unlabeled;
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

/// One visit of a stored state graph.
struct StateNode {
  GraphId graph_id = 0;
  double reward = 0.0;
  Label label = Label::unlabeled;
  std::int64_t episode = 0;
  std::int64_t t = 0;

  friend bool operator==(const StateNode&, const StateNode&) = default;
};

struct TemporalEdge {
  GraphId from = 0;
  GraphId to = 0;
  std::int64_t t = 0;  // step index of the `to` visit

  friend bool operator==(const TemporalEdge&, const TemporalEdge&) = default;
};

struct EpisodeGraph {
  std::vector<StateNode> state_nodes;
  std::vector<TemporalEdge> temporal_edges;

  /// Appends a visit and links it to the previous visit of the same episode.
  void append(StateNode node) {
    for (auto it = state_nodes.rbegin(); it != state_nodes.rend(); ++it) {
      if (it->episode != node.episode) continue;
      if (node.t <= it->t) throw std::invalid_argument("episode chain: step index must be strictly increasing");
      temporal_edges.push_back(TemporalEdge{it->graph_id, node.graph_id, node.t});
      break;
    }
    state_nodes.push_back(node);
  }

  /// Visit order of one episode, reconstructed from the chain.
  std::vector<StateNode> episode_chain(std::int64_t episode) const {
    std::vector<StateNode> out;
    for (const auto& n : state_nodes)
      if (n.episode == episode) out.push_back(n);
    std::stable_sort(out.begin(), out.end(), [](const StateNode& a, const StateNode& b) { return a.t < b.t; });
    return out;
  }

  void clear() {
    state_nodes.clear();
    temporal_edges.clear();
  }

  friend bool operator==(const EpisodeGraph&, const EpisodeGraph&) = default;
};

}  // namespace aigenc
