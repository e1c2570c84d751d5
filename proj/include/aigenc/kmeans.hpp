#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "aigenc/concept.hpp"

namespace aigenc {

struct KMeansParams {
  std::size_t k = 4;
  int max_iter = 100;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;  // point -> centroid index
  double inertia = 0.0;

  /// Members of cluster c, in input order.
  std::vector<std::size_t> members(std::size_t c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == c) out.push_back(i);
    return out;
  }
};

/// Lloyd's algorithm with k-means++ seeding. Fewer than k centroids are returned
/// when the data has fewer than k distinct points.
inline KMeansResult kmeans(std::span<const std::vector<double>> points, const KMeansParams& params) {
  if (params.k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
  KMeansResult r;
  const std::size_t n = points.size();
  if (n == 0) return r;

  std::mt19937_64 rng(params.seed);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  r.centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  while (r.centroids.size() < params.k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], r.centroids.back()));
      total += d2[i];
    }
    if (total <= 0.0) break;
    const double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= pick && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    r.centroids.push_back(points[chosen]);
  }

  const std::size_t k = r.centroids.size();
  const std::size_t dim = points.front().size();
  r.assignment.assign(n, 0);
  for (int it = 0; it < params.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], r.centroids[c]);
        if (d < best) {
          best = d;
          r.assignment[i] = c;
        }
      }
    }
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) next[r.assignment[i]][j] += points[i][j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        next[c] = r.centroids[c];  // empty cluster keeps its centroid
        continue;
      }
      for (auto& x : next[c]) x /= static_cast<double>(counts[c]);
      shift = std::max(shift, squared_distance(next[c], r.centroids[c]));
    }
    r.centroids = std::move(next);
    if (shift <= params.tol * params.tol) break;
  }

  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = squared_distance(points[i], r.centroids[c]);
      if (d < best) {
        best = d;
        r.assignment[i] = c;
      }
    }
    r.inertia += best;
  }
  return r;
}

}  // namespace aigenc
