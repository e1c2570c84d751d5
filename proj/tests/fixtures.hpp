#pragma once

// Seeded graph generators and brute-force oracles shared by the tests.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "aigenc/experiment.hpp"

namespace fixtures {

using namespace aigenc;

inline FeatureVector random_features(std::mt19937_64& rng, std::size_t m, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(m);
  for (auto& x : v) x = u(rng);
  return FeatureVector(std::move(v));
}

inline FeatureVector unit(std::size_t m, std::size_t i, double value = 1.0) {
  FeatureVector v(m);
  v[i] = value;
  return v;
}

inline Affordance random_affordance(std::mt19937_64& rng, const Dims& d) {
  std::uniform_real_distribution<double> r(-1.0, 1.0);
  return Affordance{random_features(rng, d.action), random_features(rng, d.object, 0.5), r(rng)};
}

/// n nodes with random features and each ordered pair linked with probability p.
inline ConceptGraph random_graph(std::mt19937_64& rng, std::size_t n, const Dims& d = {}, double p = 0.3) {
  ConceptGraph g(d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) g.add_node(random_features(rng, d.object), u(rng), Origin::observed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && u(rng) < p) g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j), random_affordance(rng, d));
  return g;
}

/// Same graph with node i re-inserted at position perm[i]; ids are reassigned.
inline ConceptGraph permuted(const ConceptGraph& g, const std::vector<std::size_t>& perm) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[perm[i]] = i;
  ConceptGraph out(g.dims());
  std::vector<NodeId> new_id(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto& node = g.nodes()[order[pos]];
    new_id[order[pos]] = out.add_node(node.features, node.saliency, node.origin);
  }
  std::vector<ConceptEdge> edges = g.edges();
  std::reverse(edges.begin(), edges.end());
  for (const auto& e : edges)
    out.add_edge(new_id[*g.index_of(e.src)], new_id[*g.index_of(e.dst)], e.affordance, e.origin);
  return out;
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Minimum of (1/n) sum_i C(i, sigma(i)) over all permutations sigma.
inline double brute_force_assignment(const Matrix& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  std::vector<std::size_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sigma[i]));
    best = std::min(best, c / static_cast<double>(n));
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return best;
}

/// Planted fixture: two tight blobs of points far apart, returned with their blob ids.
struct Blobs {
  std::vector<std::vector<double>> points;
  std::vector<int> blob;
};

inline Blobs planted_blobs(std::mt19937_64& rng, std::size_t dim, std::size_t n_a, std::size_t n_b, double spread,
                           double separation) {
  Blobs out;
  std::uniform_real_distribution<double> u(-spread, spread);
  const std::vector<double> ca(dim, 0.0);
  std::vector<double> cb(dim, 0.0);
  cb[0] = separation;
  for (std::size_t i = 0; i < n_a + n_b; ++i) {
    const bool a = i < n_a;
    std::vector<double> p = a ? ca : cb;
    for (auto& x : p) x += u(rng);
    out.points.push_back(std::move(p));
    out.blob.push_back(a ? 0 : 1);
  }
  return out;
}

/// Brute force over all 2-partitions: the split minimising the within-cluster
/// sum of squares, and the medoid (point nearest its part's mean) of each part.
inline std::vector<std::size_t> optimal_two_partition_medoids(const std::vector<std::vector<double>>& pts) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front().size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_medoids;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    std::vector<std::size_t> parts[2];
    for (std::size_t i = 0; i < n; ++i) parts[(mask >> i) & 1].push_back(i);
    double wcss = 0.0;
    std::vector<std::size_t> medoids;
    for (const auto& part : parts) {
      std::vector<double> mean(dim, 0.0);
      for (std::size_t i : part)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += pts[i][d] / static_cast<double>(part.size());
      double nearest = std::numeric_limits<double>::infinity();
      std::size_t medoid = part.front();
      for (std::size_t i : part) {
        const double d2 = squared_distance(pts[i], mean);
        wcss += d2;
        if (d2 < nearest) {
          nearest = d2;
          medoid = i;
        }
      }
      medoids.push_back(medoid);
    }
    if (wcss < best) {
      best = wcss;
      std::sort(medoids.begin(), medoids.end());
      best_medoids = medoids;
    }
  }
  return best_medoids;
}

/// Single-node graph; its embedding is controlled through the node features.
inline ConceptGraph node_graph(const FeatureVector& f, const Dims& d = {}) {
  ConceptGraph g(d);
  g.add_node(f, 0.5, Origin::observed);
  return g;
}

inline RunConfig small_config() {
  RunConfig c;
  c.episodes = 20;
  c.init_episodes = 5;
  c.max_steps = 60;
  return c;
}

}  // namespace fixtures
