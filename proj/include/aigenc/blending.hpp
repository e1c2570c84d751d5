#pragma once

// Blending: when the agent is stuck, combine a current concept with a moderately
// similar remembered one into a new concept, keep it only if it lands near an
// existing concept cluster, and add it to the current state graph.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "aigenc/concept.hpp"
#include "aigenc/kmeans.hpp"
#include "aigenc/memory.hpp"

namespace aigenc {

class ImpasseTracker {
 public:
  explicit ImpasseTracker(std::size_t failures = 5) : threshold_(failures) {
    if (failures == 0) throw std::invalid_argument("impasse tracker: F must be >= 1");
  }

  std::size_t threshold() const { return threshold_; }
  std::size_t consecutive_failures() const { return window_.size(); }

  /// Records an episode outcome; true iff the last F outcomes are all failures.
  bool record(bool success) {
    if (success) {
      window_.clear();
      return false;
    }
    window_.push_back(false);
    while (window_.size() > threshold_) window_.pop_front();
    return window_.size() == threshold_;
  }

 private:
  std::size_t threshold_;
  std::deque<bool> window_;
};

inline bool detect_impasse(ImpasseTracker& tracker, bool success) { return tracker.record(success); }

/// A node taken from the current graph (no ltm_graph) or from a stored LTM graph.
struct BlendParent {
  std::optional<GraphId> ltm_graph;
  NodeId node = 0;
  FeatureVector features;
  double saliency = 0.0;
};

struct BlendCandidate {
  BlendParent current;     // from g_t
  BlendParent remembered;  // from LTM
  double similarity = 0.0;
};

struct BlendingParams {
  double x = 0.5;
  double z = 0.8;
  std::size_t limit = 3;
  /// Acceptance radius; <= 0 means the covering radius of the LTM clusters, +inf accepts everything.
  double delta = -1.0;
  double tau = 1.0;
  std::size_t k = 4;
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-8;
  int permutation_repeats = 5;
};

/// Feature-level similarity exp(-|a - b|^2 / (M tau)).
inline double node_similarity(const FeatureVector& a, const FeatureVector& b, double tau) {
  return std::exp(-squared_distance(a.view(), b.view()) / (static_cast<double>(a.size()) * tau));
}

/// Pairs (g_t node, LTM node) with X <= similarity < Z, best `limit` first.
/// A remembered concept that already has a counterpart in g_t at similarity
/// >= Z is left to reasoning and never offered for blending.
inline std::vector<BlendCandidate> select_blend_candidates(const ConceptGraph& g_t, const MemoryStore& ltm,
                                                           const BlendingParams& p) {
  if (!(p.x > 0.0 && p.x < p.z && p.z <= 1.0)) throw std::invalid_argument("blend candidates: need 0 < X < Z <= 1");
  std::vector<BlendCandidate> out;
  auto represented = [&](const ConceptNode& b) {
    return std::any_of(g_t.nodes().begin(), g_t.nodes().end(), [&](const ConceptNode& a) {
      return a.origin != Origin::blended && node_similarity(a.features, b.features, p.tau) >= p.z;
    });
  };
  for (const auto& a : g_t.nodes()) {
    if (a.origin == Origin::blended) continue;
    for (const auto& stored : ltm.graphs())
      for (const auto& b : stored.graph.nodes()) {
        if (represented(b)) continue;
        const double s = node_similarity(a.features, b.features, p.tau);
        if (s < p.x || s >= p.z) continue;
        out.push_back(BlendCandidate{BlendParent{std::nullopt, a.id, a.features, a.saliency},
                                     BlendParent{stored.id, b.id, b.features, b.saliency}, s});
      }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BlendCandidate& l, const BlendCandidate& r) { return l.similarity > r.similarity; });
  if (out.size() > p.limit) out.resize(p.limit);
  return out;
}

namespace detail {

struct LabeledPoints {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

inline LabeledPoints labeled_ltm_nodes(const MemoryStore& ltm) {
  LabeledPoints out;
  for (const auto& s : ltm.episode_graph().state_nodes) {
    if (s.label == Label::unlabeled) continue;
    const StoredGraph* g = ltm.find(s.graph_id);
    if (!g) continue;
    for (const auto& n : g->graph.nodes()) {
      out.x.push_back(n.features.values());
      out.y.push_back(s.label == Label::one ? 1 : 0);
    }
  }
  return out;
}

/// Leave-one-out nearest-class-centroid classifier. Each sample is scored
/// against its own class centroid computed without it.
struct LooScore {
  double accuracy = 0.0;
  double margin = 0.0;  // mean of (squared distance to the other centroid - to the own one)
};

inline LooScore loo_centroid_score(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  const std::size_t n = x.size();
  const std::size_t dim = x.front().size();
  std::vector<double> sum[2] = {std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    ++count[y[i]];
    for (std::size_t d = 0; d < dim; ++d) sum[y[i]][d] += x[i][d];
  }
  LooScore score;
  std::size_t correct = 0;
  std::size_t scored = 0;
  std::vector<double> c(dim);
  for (std::size_t i = 0; i < n; ++i) {
    double dist[2];
    for (int k = 0; k < 2; ++k) {
      const bool own = y[i] == k;
      const std::size_t m = count[k] - (own ? 1 : 0);
      if (m == 0) {
        dist[k] = std::numeric_limits<double>::infinity();
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) c[d] = (sum[k][d] - (own ? x[i][d] : 0.0)) / static_cast<double>(m);
      dist[k] = squared_distance(x[i], c);
    }
    const int predicted = dist[1] < dist[0] ? 1 : 0;
    correct += predicted == y[i];
    const double own_d = dist[y[i]];
    const double other_d = dist[1 - y[i]];
    if (std::isfinite(own_d) && std::isfinite(other_d)) {
      score.margin += other_d - own_d;
      ++scored;
    }
  }
  score.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (scored) score.margin /= static_cast<double>(scored);
  return score;
}

}  // namespace detail

/// Permutation importance of each feature for predicting the success label of
/// LTM nodes, min-max normalised to [0,1]. Uniform 0.5 without both labels.
/// A permutation is scored by how much it shrinks the mean leave-one-out
/// margin, so features that only matter jointly with others still register.
inline std::vector<double> feature_saliency(const MemoryStore& ltm, std::uint64_t seed, int repeats = 5) {
  const std::size_t m = ltm.dims().object;
  std::vector<double> uniform(m, 0.5);
  detail::LabeledPoints data = detail::labeled_ltm_nodes(ltm);
  const auto ones = std::count(data.y.begin(), data.y.end(), 1);
  if (data.x.size() < 2 || ones == 0 || ones == static_cast<long>(data.y.size())) return uniform;

  const double base = detail::loo_centroid_score(data.x, data.y).margin;
  std::mt19937_64 rng(seed);
  std::vector<double> importance(m, 0.0);
  std::vector<std::size_t> perm(data.x.size());
  const int r_count = std::max(1, repeats);
  for (std::size_t d = 0; d < m; ++d) {
    double permuted = 0.0;
    for (int r = 0; r < r_count; ++r) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      auto shuffled = data.x;
      for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i][d] = data.x[perm[i]][d];
      permuted += detail::loo_centroid_score(shuffled, data.y).margin;
    }
    importance[d] = base - permuted / r_count;
  }
  const auto [lo, hi] = std::minmax_element(importance.begin(), importance.end());
  if (*hi - *lo <= 1e-12) return uniform;
  std::vector<double> w(m);
  for (std::size_t d = 0; d < m; ++d) w[d] = (importance[d] - *lo) / (*hi - *lo);
  return w;
}

/// w * a + (1 - w) * b, element-wise.
inline FeatureVector blend(const FeatureVector& a, const FeatureVector& b, const std::vector<double>& w) {
  if (a.size() != b.size() || a.size() != w.size()) throw std::invalid_argument("blend: dimension mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i] * a[i] + (1.0 - w[i]) * b[i];
  return FeatureVector(std::move(out));
}

/// k-means view of all LTM node features, used to accept or reject blends.
class ConceptClusters {
 public:
  ConceptClusters(const MemoryStore& ltm, const BlendingParams& p, std::uint64_t seed) {
    for (const auto& s : ltm.graphs())
      for (const auto& n : s.graph.nodes()) points_.push_back(n.features.values());
    km_ = kmeans(points_, KMeansParams{p.k, p.kmeans_max_iter, p.kmeans_tol, seed});
  }

  bool empty() const { return points_.empty(); }
  const KMeansResult& clusters() const { return km_; }

  /// Largest member-to-centroid distance over all clusters. Every LTM node
  /// lies within this distance of some centroid.
  double covering_radius() const {
    double r = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
      r = std::max(r, distance(points_[i], km_.centroids[km_.assignment[i]]));
    return r;
  }

  double nearest_centroid_distance(const FeatureVector& c) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& centroid : km_.centroids) best = std::min(best, distance(c.view(), centroid));
    return best;
  }

  double resolve_delta(double delta) const { return delta > 0.0 ? delta : covering_radius(); }

 private:
  std::vector<std::vector<double>> points_;
  KMeansResult km_;
};

inline bool accept_blend(const FeatureVector& c, const ConceptClusters& clusters, double delta) {
  if (clusters.empty()) return false;
  if (std::isinf(delta) && delta > 0) return true;
  return clusters.nearest_centroid_distance(c) <= clusters.resolve_delta(delta);
}

inline bool accept_blend(const FeatureVector& c, const MemoryStore& ltm, double delta, const BlendingParams& p = {},
                         std::uint64_t seed = 0) {
  return accept_blend(c, ConceptClusters(ltm, p, seed), delta);
}

/// Adds the blended concept to g_t. It takes the larger parent saliency and
/// inherits both parents' incident affordance edges. Edges of a remembered
/// parent are attached to the g_t node nearest their other endpoint.
inline ConceptGraph inject(const ConceptGraph& g_t, const FeatureVector& c, const BlendParent& a,
                           const BlendParent& b, const MemoryStore* ltm = nullptr) {
  ConceptGraph out = g_t;
  const NodeId fresh = out.add_node(c, std::max(a.saliency, b.saliency), Origin::blended);

  auto nearest_in_gt = [&](const FeatureVector& f) -> std::optional<NodeId> {
    std::optional<NodeId> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& n : g_t.nodes()) {
      const double d = squared_distance(n.features.view(), f.view());
      if (d < best_d) {
        best_d = d;
        best = n.id;
      }
    }
    return best;
  };

  auto inherit = [&](const BlendParent& parent) {
    if (!parent.ltm_graph) {
      if (!g_t.contains(parent.node)) return;
      for (const auto& e : g_t.edges()) {
        if (e.src != parent.node && e.dst != parent.node) continue;
        out.add_edge(e.src == parent.node ? fresh : e.src, e.dst == parent.node ? fresh : e.dst, e.affordance,
                     Origin::blended);
      }
      return;
    }
    if (!ltm || !ltm->find(*parent.ltm_graph)) return;
    const ConceptGraph& src = ltm->graph(*parent.ltm_graph);
    for (const auto& e : src.edges()) {
      if (e.src != parent.node && e.dst != parent.node) continue;
      auto resolve = [&](NodeId id) -> std::optional<NodeId> {
        if (id == parent.node) return fresh;
        return nearest_in_gt(src.node(id).features);
      };
      const auto s = resolve(e.src);
      const auto d = resolve(e.dst);
      if (s && d) out.add_edge(*s, *d, e.affordance, Origin::blended);
    }
  };
  inherit(a);
  inherit(b);
  return out;
}

struct BlendDecision {
  BlendCandidate candidate;
  FeatureVector concept_features;
  double centroid_distance = 0.0;
  bool accepted = false;
};

struct BlendingReport {
  std::vector<double> weights;
  double delta = 0.0;
  std::vector<BlendDecision> decisions;
  ConceptGraph result;

  std::size_t injected() const {
    return static_cast<std::size_t>(
        std::count_if(decisions.begin(), decisions.end(), [](const BlendDecision& d) { return d.accepted; }));
  }
};

/// select -> weigh -> blend -> accept -> inject. g_t comes back unchanged when
/// there are no candidates or no blend is accepted.
inline BlendingReport run_blending(const ConceptGraph& g_t, const MemoryStore& ltm, const BlendingParams& p,
                                   std::uint64_t seed) {
  BlendingReport report;
  report.result = g_t;
  const auto candidates = select_blend_candidates(g_t, ltm, p);
  if (candidates.empty()) return report;

  report.weights = feature_saliency(ltm, seed, p.permutation_repeats);
  const ConceptClusters clusters(ltm, p, seed);
  report.delta = std::isinf(p.delta) ? p.delta : clusters.resolve_delta(p.delta);
  for (const auto& cand : candidates) {
    BlendDecision d{cand, blend(cand.remembered.features, cand.current.features, report.weights), 0.0, false};
    d.centroid_distance = clusters.nearest_centroid_distance(d.concept_features);
    d.accepted = accept_blend(d.concept_features, clusters, p.delta);
    if (d.accepted) report.result = inject(report.result, d.concept_features, cand.current, cand.remembered, &ltm);
    report.decisions.push_back(std::move(d));
  }
  return report;
}

}  // namespace aigenc
