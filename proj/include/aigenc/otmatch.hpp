#pragma once

// Graph comparison by optimal transport.
//
// Two concept graphs are compared with the fused Gromov-Wasserstein objective
//
//   F(T) = (1 - alpha) <M, T> + alpha * sum_{ijkl} (C1_ik - C2_jl)^2 T_ij T_kl
//
// over couplings T with uniform marginals, where M is the node feature cost and
// C1, C2 are hop-count structure matrices. The solver alternates linearisation
// with entropic (log-domain Sinkhorn) inner solves, then polishes the best
// iterate with exact conditional-gradient steps. The returned distance is F at
// the best feasible coupling seen.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "aigenc/concept.hpp"

namespace aigenc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct OtParams {
  double alpha = 0.5;
  double epsilon = 0.05;
  double tau = 1.0;
  int max_outer = 200;
  int max_inner = 50;
  double tol = 1e-6;
  /// Exact conditional-gradient polish is skipped above this expanded problem size.
  std::size_t polish_limit = 240;
};

/// Transport plan with uniform marginals (1/n1 rows, 1/n2 columns).
struct Coupling {
  Matrix plan;

  std::size_t rows() const { return static_cast<std::size_t>(plan.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(plan.cols()); }

  /// Largest absolute deviation of any row or column sum from uniform.
  double marginal_error() const {
    if (plan.size() == 0) return 0.0;
    const double a = 1.0 / static_cast<double>(plan.rows());
    const double b = 1.0 / static_cast<double>(plan.cols());
    const double row = (plan.rowwise().sum().array() - a).abs().maxCoeff();
    const double col = (plan.colwise().sum().array() - b).abs().maxCoeff();
    return std::max(row, col);
  }
};

struct MatchResult {
  double distance = 0.0;
  double similarity = 1.0;
  Coupling coupling;
  bool converged = true;
};

inline double similarity(double distance, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("similarity: tau must be > 0");
  if (distance < 0.0) throw std::invalid_argument("similarity: distance must be >= 0");
  return std::exp(-distance / tau);
}

/// Squared Euclidean distance between node features, divided by M.
inline Matrix node_cost_matrix(const ConceptGraph& g1, const ConceptGraph& g2) {
  if (g1.dims().object != g2.dims().object) throw std::invalid_argument("node_cost_matrix: dimension mismatch");
  const auto& a = g1.nodes();
  const auto& b = g2.nodes();
  const double m = static_cast<double>(g1.dims().object);
  Matrix out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          squared_distance(a[i].features.view(), b[j].features.view()) / m;
  return out;
}

/// Hop counts on the undirected edge skeleton; unreachable pairs get n.
inline Matrix structure_matrix(const ConceptGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : g.edges()) {
    const std::size_t s = *g.index_of(e.src);
    const std::size_t d = *g.index_of(e.dst);
    if (s == d) continue;
    adj[s].push_back(d);
    adj[d].push_back(s);
  }
  const auto sentinel = static_cast<double>(n);
  Matrix out = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), sentinel);
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<int> hops(n, -1);
    std::queue<std::size_t> q;
    hops[src] = 0;
    q.push(src);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u])
        if (hops[v] < 0) {
          hops[v] = hops[u] + 1;
          q.push(v);
        }
    }
    for (std::size_t v = 0; v < n; ++v)
      if (hops[v] >= 0) out(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(v)) = hops[v];
  }
  return out;
}

struct SinkhornResult {
  Coupling coupling;
  bool converged = false;
  int iterations = 0;
  /// Dual objective after every full sweep; non-decreasing.
  std::vector<double> dual_trace;
  /// Column potential, usable as a warm start.
  Vector g;
};

namespace detail {

inline double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

/// Entropic OT with uniform marginals, solved in the log domain.
/// The plan is returned as iterated (column marginals exact, rows within tol when converged).
inline SinkhornResult sinkhorn(const Matrix& cost, double epsilon, int max_iter, double tol,
                               const Vector* warm_g = nullptr) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be > 0");
  if (!cost.allFinite()) throw std::invalid_argument("sinkhorn: cost must be finite");
  const Eigen::Index n1 = cost.rows();
  const Eigen::Index n2 = cost.cols();
  SinkhornResult r;
  if (n1 == 0 || n2 == 0) {
    r.coupling.plan = Matrix(n1, n2);
    r.converged = true;
    return r;
  }
  const double log_a = -std::log(static_cast<double>(n1));
  const double log_b = -std::log(static_cast<double>(n2));
  Vector f = Vector::Zero(n1);
  Vector g = (warm_g && warm_g->size() == n2) ? *warm_g : Vector::Zero(n2);

  auto plan = [&] {
    Matrix t(n1, n2);
    for (Eigen::Index i = 0; i < n1; ++i)
      for (Eigen::Index j = 0; j < n2; ++j) t(i, j) = std::exp((f(i) + g(j) - cost(i, j)) / epsilon);
    return t;
  };

  Vector buf;
  for (int it = 0; it < std::max(1, max_iter); ++it) {
    buf.resize(n2);
    for (Eigen::Index i = 0; i < n1; ++i) {
      for (Eigen::Index j = 0; j < n2; ++j) buf(j) = (g(j) - cost(i, j)) / epsilon;
      f(i) = epsilon * (log_a - detail::log_sum_exp(buf));
    }
    buf.resize(n1);
    for (Eigen::Index j = 0; j < n2; ++j) {
      for (Eigen::Index i = 0; i < n1; ++i) buf(i) = (f(i) - cost(i, j)) / epsilon;
      g(j) = epsilon * (log_b - detail::log_sum_exp(buf));
    }
    r.iterations = it + 1;
    Matrix t = plan();
    r.dual_trace.push_back(f.sum() / static_cast<double>(n1) + g.sum() / static_cast<double>(n2) -
                           epsilon * t.sum() + epsilon);
    const double row_err = (t.rowwise().sum().array() - std::exp(log_a)).abs().maxCoeff();
    if (row_err <= tol) {
      r.converged = true;
      r.coupling.plan = std::move(t);
      r.g = g;
      return r;
    }
    if (it + 1 == std::max(1, max_iter)) r.coupling.plan = std::move(t);
  }
  r.g = g;
  return r;
}

/// Projects a nonnegative matrix onto the uniform-marginal transport polytope
/// (Altschuler, Weed & Rigollet rounding). The result is feasible to rounding error.
inline Matrix round_to_feasible(Matrix t) {
  const Eigen::Index n1 = t.rows();
  const Eigen::Index n2 = t.cols();
  if (n1 == 0 || n2 == 0) return t;
  const double a = 1.0 / static_cast<double>(n1);
  const double b = 1.0 / static_cast<double>(n2);
  t = t.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < n1; ++i) {
    const double s = t.row(i).sum();
    if (s > a) t.row(i) *= a / s;
  }
  for (Eigen::Index j = 0; j < n2; ++j) {
    const double s = t.col(j).sum();
    if (s > b) t.col(j) *= b / s;
  }
  Vector er = (Vector::Constant(n1, a) - t.rowwise().sum()).cwiseMax(0.0);
  Vector ec = (Vector::Constant(n2, b) - t.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = er.sum();
  if (mass > 0.0) t += er * ec.transpose() / mass;
  return t;
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting paths, O(n^3)).
/// Returns the column assigned to each row.
inline std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw std::invalid_argument("solve_assignment: matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

/// Exact OT plan between uniform marginals, via assignment on the lcm-replicated problem.
inline Matrix exact_transport(const Matrix& cost) {
  const auto n1 = static_cast<std::size_t>(cost.rows());
  const auto n2 = static_cast<std::size_t>(cost.cols());
  const std::size_t l = std::lcm(n1, n2);
  const std::size_t ra = l / n1;
  const std::size_t rb = l / n2;
  Matrix big(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l));
  for (std::size_t r = 0; r < l; ++r)
    for (std::size_t c = 0; c < l; ++c)
      big(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          cost(static_cast<Eigen::Index>(r / ra), static_cast<Eigen::Index>(c / rb));
  const auto assign = solve_assignment(big);
  Matrix t = Matrix::Zero(cost.rows(), cost.cols());
  const double unit = 1.0 / static_cast<double>(l);
  for (std::size_t r = 0; r < l; ++r)
    t(static_cast<Eigen::Index>(r / ra), static_cast<Eigen::Index>(assign[r] / rb)) += unit;
  return t;
}

/// FGW on precomputed matrices (node cost n1 x n2, symmetric structure matrices).
class FgwProblem {
 public:
  FgwProblem(Matrix cost, Matrix c1, Matrix c2, double alpha)
      : m_(std::move(cost)), c1_(std::move(c1)), c2_(std::move(c2)), alpha_(alpha) {
    const Eigen::Index n1 = m_.rows();
    const Eigen::Index n2 = m_.cols();
    const Vector p = Vector::Constant(n1, 1.0 / static_cast<double>(n1));
    const Vector q = Vector::Constant(n2, 1.0 / static_cast<double>(n2));
    const Vector u = c1_.cwiseProduct(c1_) * p;
    const Vector v = c2_.cwiseProduct(c2_) * q;
    const_c_ = u * Vector::Ones(n2).transpose() + Vector::Ones(n1) * v.transpose();
  }

  /// Square-loss tensor product L(C1, C2) (x) T, valid for feasible T.
  Matrix tensor(const Matrix& t) const { return const_c_ - 2.0 * c1_ * t * c2_.transpose(); }

  double objective(const Matrix& t) const {
    const double w = (m_.array() * t.array()).sum();
    const double gw = (tensor(t).array() * t.array()).sum();
    return (1.0 - alpha_) * w + alpha_ * gw;
  }

  Matrix gradient(const Matrix& t) const { return (1.0 - alpha_) * m_ + 2.0 * alpha_ * tensor(t); }

  /// Exact line search for F(T + gamma D), gamma in [0, 1], D with zero marginals.
  double line_search(const Matrix& grad, const Matrix& d) const {
    const double a = -2.0 * alpha_ * ((c1_ * d * c2_.transpose()).array() * d.array()).sum();
    const double b = (grad.array() * d.array()).sum();
    if (a > 0.0) return std::clamp(-b / (2.0 * a), 0.0, 1.0);
    return a + b < 0.0 ? 1.0 : 0.0;
  }

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }

 private:
  Matrix m_, c1_, c2_, const_c_;
  double alpha_;
};

/// Solves FGW for precomputed matrices; distance and coupling only (similarity left to caller).
inline MatchResult fgw_solve(const FgwProblem& prob, const OtParams& params) {
  const Eigen::Index n1 = prob.rows();
  const Eigen::Index n2 = prob.cols();
  MatchResult res;
  Matrix t = Matrix::Constant(n1, n2, 1.0 / static_cast<double>(n1 * n2));
  Matrix best = t;
  double best_f = prob.objective(t);
  bool converged = false;

  Vector warm;
  for (int outer = 0; outer < params.max_outer; ++outer) {
    const Matrix grad = prob.gradient(t);
    SinkhornResult sk = sinkhorn(grad, params.epsilon, params.max_inner, params.tol, warm.size() ? &warm : nullptr);
    warm = sk.g;
    Matrix next = round_to_feasible(sk.coupling.plan);
    const double f = prob.objective(next);
    if (f < best_f) {
      best_f = f;
      best = next;
    }
    const double change = (next - t).cwiseAbs().maxCoeff();
    t = std::move(next);
    if (change <= params.tol) {
      converged = true;
      break;
    }
  }

  if (std::lcm(static_cast<std::size_t>(n1), static_cast<std::size_t>(n2)) <= params.polish_limit) {
    t = best;
    for (int it = 0; it < params.max_outer; ++it) {
      const Matrix grad = prob.gradient(t);
      const Matrix d = exact_transport(grad) - t;
      const double slope = (grad.array() * d.array()).sum();
      if (slope >= -1e-14) {
        converged = true;
        break;
      }
      const double gamma = prob.line_search(grad, d);
      if (gamma <= 0.0) {
        converged = true;
        break;
      }
      t += gamma * d;
      const double f = prob.objective(t);
      if (f < best_f - 1e-15) {
        best_f = f;
        best = t;
      } else {
        converged = true;
        break;
      }
    }
  }

  res.distance = std::max(0.0, best_f);
  res.coupling.plan = std::move(best);
  res.converged = converged;
  return res;
}

namespace detail {

/// Permutation-invariant ordering key used to fix the orientation of a pair.
inline std::vector<std::vector<double>> canonical_key(const ConceptGraph& g) {
  std::vector<std::vector<double>> rows;
  rows.reserve(g.node_count() + 1);
  for (const auto& n : g.nodes()) rows.push_back(n.features.values());
  std::sort(rows.begin(), rows.end());
  std::vector<double> degrees;
  for (const auto& n : g.nodes()) {
    double d = 0;
    for (const auto& e : g.edges()) d += (e.src == n.id) + (e.dst == n.id);
    degrees.push_back(d);
  }
  std::sort(degrees.begin(), degrees.end());
  rows.push_back(std::move(degrees));
  return rows;
}

}  // namespace detail

/// Fused Gromov-Wasserstein match of two concept graphs.
///
/// Conventions: both empty -> distance 0, similarity 1; exactly one empty ->
/// distance +inf, similarity 0, empty coupling.
inline MatchResult fgw_distance(const ConceptGraph& g1, const ConceptGraph& g2, const OtParams& params = {}) {
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw std::invalid_argument("fgw: alpha must be in [0,1]");
  if (!(params.epsilon > 0.0)) throw std::invalid_argument("fgw: epsilon must be > 0");
  if (!(params.tau > 0.0)) throw std::invalid_argument("fgw: tau must be > 0");
  MatchResult res;
  if (g1.empty() && g2.empty()) {
    res.coupling.plan = Matrix(0, 0);
    return res;
  }
  if (g1.empty() || g2.empty()) {
    res.distance = std::numeric_limits<double>::infinity();
    res.similarity = 0.0;
    res.coupling.plan = Matrix(0, 0);
    return res;
  }

  // Solve in a canonical orientation so that fgw(a, b) and fgw(b, a) agree exactly.
  bool swap = g2.node_count() < g1.node_count();
  if (g1.node_count() == g2.node_count()) swap = detail::canonical_key(g2) < detail::canonical_key(g1);
  const ConceptGraph& a = swap ? g2 : g1;
  const ConceptGraph& b = swap ? g1 : g2;

  FgwProblem prob(node_cost_matrix(a, b), structure_matrix(a), structure_matrix(b), params.alpha);
  res = fgw_solve(prob, params);
  if (swap) res.coupling.plan.transposeInPlace();
  res.similarity = similarity(res.distance, params.tau);
  return res;
}

/// Cheap lower bound on the fgw distance (feature term only).
inline double fgw_lower_bound(const ConceptGraph& g1, const ConceptGraph& g2, const OtParams& params = {}) {
  if (g1.empty() && g2.empty()) return 0.0;
  if (g1.empty() || g2.empty()) return std::numeric_limits<double>::infinity();
  const Matrix m = node_cost_matrix(g1, g2);
  const double rows = m.rowwise().minCoeff().mean();
  const double cols = m.colwise().minCoeff().mean();
  return (1.0 - params.alpha) * std::max(rows, cols);
}

}  // namespace aigenc
