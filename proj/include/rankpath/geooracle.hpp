#pragma once

// Independent estimates of the inner distance, used to sandwich constructed
// paths: d_out <= shortened <= constructed. None of these are certificates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pathbuilder.hpp"
#include "variety.hpp"

namespace rankpath {

struct OracleConfig {
  int n_samples = 150;
  double edge_membership_tol = 1e-6;
  int midpoint_checks_per_edge = 3;
  int shorten_iterations = 6;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_samples < 1 || midpoint_checks_per_edge < 1 || shorten_iterations < 1)
      throw std::invalid_argument("oracle counts must be positive");
    if (!(edge_membership_tol > 0.0 && edge_membership_tol < 1.0))
      throw std::invalid_argument("edge_membership_tol must lie in (0, 1)");
  }
};

struct WeightedEdge {
  std::size_t to;
  double weight;
};

using Adjacency = std::vector<std::vector<WeightedEdge>>;

/// Dijkstra from src; nullopt when dst is not reachable.
inline std::optional<double> shortest_path_length(const Adjacency& graph, std::size_t src, std::size_t dst) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(graph.size(), inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.emplace(0.0, src);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == dst) return d;
    for (const auto& e : graph[u]) {
      const double nd = d + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        heap.emplace(nd, e.to);
      }
    }
  }
  return std::nullopt;
}

namespace detail {

/// Orthonormal basis (k columns) whose leading columns span the column space
/// of a; padded with random directions when rank(a) < k.
template <class Rng>
DenseMatrix anchored_basis(const Matrix& a, Index k, bool rows, Rng& rng) {
  const Svd s = svd(a, true);
  const DenseMatrix& src = rows ? s.V : s.U;
  const Index dim = rows ? a.cols() : a.rows();
  const Index r = std::min<Index>(numerical_rank(s.sigma), k);
  DenseMatrix basis(dim, k);
  basis.leftCols(r) = src.leftCols(r);
  if (k > r) basis.rightCols(k - r) = gaussian_matrix(dim, k - r, a.field(), rng);
  return basis;
}

}  // namespace detail

/// Nodes for the sampled graph: p, q, 0, then n_samples points of radius at
/// most 2 max(|p|, |q|). Ranks are drawn uniformly from 1..t-1. Half of the
/// samples are plain Gaussian factorizations; the other half reuse the row or
/// column spaces of p or q so that admissible edges exist between them.
inline std::vector<Matrix> oracle_nodes(const Matrix& p, const Matrix& q, const VarietyDescriptor& d,
                                        const OracleConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = 2.0 * std::max(p.frobenius_norm(), q.frobenius_norm());
  std::vector<Matrix> nodes{p, q, Matrix::zeros(d.m, d.n, d.field)};
  if (d.t < 2 || radius == 0.0) return nodes;
  std::uniform_int_distribution<int> rank_pick(1, d.t - 1);
  std::uniform_int_distribution<int> anchor_pick(0, 2);
  for (int i = 0; i < cfg.n_samples; ++i) {
    const int r = rank_pick(rng);
    const double target = radius * (1.0 - unit(rng));  // (0, radius]
    if (i % 2 == 0) {
      nodes.push_back(sample_stratum_with(d, r, target, rng));
      continue;
    }
    auto pick = [&](bool rows) -> DenseMatrix {
      const int which = anchor_pick(rng);
      if (which == 0) return detail::anchored_basis(p, r, rows, rng);
      if (which == 1) return detail::anchored_basis(q, r, rows, rng);
      return gaussian_matrix(rows ? d.n : d.m, r, d.field, rng);
    };
    DenseMatrix left = pick(false);
    DenseMatrix right = pick(true);
    DenseMatrix core = gaussian_matrix(r, r, d.field, rng);
    DenseMatrix x = left * core * right.adjoint();
    const double nx = x.norm();
    if (nx == 0.0) continue;
    x *= target / nx;
    if (d.field == ScalarField::Real) x = x.real().cast<Scalar>();
    nodes.emplace_back(std::move(x), d.field);
  }
  return nodes;
}

inline bool segment_admissible(const Matrix& a, const Matrix& b, const VarietyDescriptor& d, int checks,
                               double tol) {
  for (int k = 1; k <= checks; ++k) {
    const double s = static_cast<double>(k) / (checks + 1);
    if (membership_residual(a.lerp(b, s), d) > tol) return false;
  }
  return true;
}

/// Shortest path between p and q through sampled members; edges are straight
/// segments whose interior checks pass. nullopt means unreachable.
inline std::optional<double> graph_upper_bound(const Matrix& p, const Matrix& q, const VarietyDescriptor& d,
                                               const OracleConfig& cfg = {}) {
  cfg.validate();
  check_shape(p, d);
  check_shape(q, d);
  if (frobenius_distance(p, q) == 0.0) return 0.0;
  const std::vector<Matrix> nodes = oracle_nodes(p, q, d, cfg);
  Adjacency graph(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (!segment_admissible(nodes[i], nodes[j], d, cfg.midpoint_checks_per_edge, cfg.edge_membership_tol))
        continue;
      const double w = frobenius_distance(nodes[i], nodes[j]);
      graph[i].push_back({j, w});
      graph[j].push_back({i, w});
    }
  }
  return shortest_path_length(graph, 0, 1);
}

inline constexpr double kShortenResidualTol = 1e-8;
inline constexpr std::size_t kShortenMaxBreakpoints = 2048;

/// Local shortening with projection. Each round subdivides segments at their
/// (on-variety) midpoints, then sweeps the interior replacing x_i by
/// project((x_{i-1} + x_{i+1}) / 2) whenever that strictly shortens the path
/// and keeps the residual under 1e-8. Endpoints never move. Appends the
/// length after every round to `history` if given.
inline PiecewisePath shorten(const PiecewisePath& path, const VarietyDescriptor& d, const OracleConfig& cfg,
                             std::vector<double>* history) {
  cfg.validate();
  std::vector<Matrix> pts = path.breakpoints;
  auto residual = [&d](const Matrix& x) { return membership_residual(x, d); };
  if (history) history->push_back(path.length());
  if (pts.size() < 2) return path;

  for (int it = 0; it < cfg.shorten_iterations; ++it) {
    if (pts.size() * 2 <= kShortenMaxBreakpoints) {
      std::vector<Matrix> refined;
      refined.reserve(pts.size() * 2);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        refined.push_back(pts[i]);
        Matrix mid = pts[i].lerp(pts[i + 1], 0.5);
        if (residual(mid) <= kShortenResidualTol) refined.push_back(std::move(mid));
      }
      refined.push_back(pts.back());
      pts = std::move(refined);
    }
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      Matrix candidate = project(pts[i - 1].lerp(pts[i + 1], 0.5), d);
      const double before = frobenius_distance(pts[i - 1], pts[i]) + frobenius_distance(pts[i], pts[i + 1]);
      const double after = frobenius_distance(pts[i - 1], candidate) + frobenius_distance(candidate, pts[i + 1]);
      if (after < before && residual(candidate) <= kShortenResidualTol) pts[i] = std::move(candidate);
    }
    if (history) history->push_back(PiecewisePath(pts).length());
  }
  return PiecewisePath(std::move(pts));
}

inline PiecewisePath shorten(const PiecewisePath& path, const VarietyDescriptor& d, const OracleConfig& cfg = {}) {
  return shorten(path, d, cfg, nullptr);
}

struct Sandwich {
  double outer = 0.0;
  double shortened = 0.0;
  double constructed = 0.0;
};

inline Sandwich sandwich(const Matrix& p, const Matrix& q, const VarietyDescriptor& d, const OracleConfig& cfg = {}) {
  const BuiltPath built = build_path(p, q, d);
  Sandwich s;
  s.outer = frobenius_distance(p, q);
  s.constructed = built.certificate.length;
  s.shortened = shorten(built.path, d, cfg).length();
  return s;
}

}  // namespace rankpath
