#pragma once

// Polyline paths inside the rank < t locus with a certified bound on
// length / chord. The construction recurses on rank: after a unitary change
// of coordinates that puts p in block upper-triangular and q in block
// lower-triangular form around a common corner, the path runs
//
//   p -> p' -> (sub-path inside the corner slice) -> q' -> q
//
// where the slice is a copy of the (m-1) x (n-1) locus of rank < t-1.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "numkernel.hpp"
#include "variety.hpp"

namespace rankpath {

enum class BranchKind { Radial, Orthogonal, General, RealFallback };

inline const char* to_string(BranchKind k) {
  switch (k) {
    case BranchKind::Radial: return "Radial";
    case BranchKind::Orthogonal: return "Orthogonal";
    case BranchKind::General: return "General";
    case BranchKind::RealFallback: return "RealFallback";
  }
  return "?";
}

inline BranchKind branch_kind_from_string(const std::string& s) {
  if (s == "Radial") return BranchKind::Radial;
  if (s == "Orthogonal") return BranchKind::Orthogonal;
  if (s == "General") return BranchKind::General;
  if (s == "RealFallback") return BranchKind::RealFallback;
  throw std::invalid_argument("unknown branch kind '" + s + "'");
}

struct BranchTag {
  BranchKind kind = BranchKind::Radial;
  int depth = 0;
  friend bool operator==(const BranchTag&, const BranchTag&) = default;
};

using BranchTrace = std::vector<BranchTag>;

inline bool has_fallback(const BranchTrace& trace) {
  return std::any_of(trace.begin(), trace.end(), [](const BranchTag& b) { return b.kind == BranchKind::RealFallback; });
}

/// Polyline through a list of breakpoints of equal shape and field.
struct PiecewisePath {
  std::vector<Matrix> breakpoints;

  PiecewisePath() = default;
  explicit PiecewisePath(std::vector<Matrix> pts) : breakpoints(std::move(pts)) {
    if (breakpoints.empty()) throw std::invalid_argument("path needs at least one breakpoint");
    for (const auto& b : breakpoints) Matrix::check_compatible(b, breakpoints.front());
  }

  std::size_t size() const { return breakpoints.size(); }
  const Matrix& front() const { return breakpoints.front(); }
  const Matrix& back() const { return breakpoints.back(); }

  double length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
      total += frobenius_distance(breakpoints[i - 1], breakpoints[i]);
    return total;
  }

  PiecewisePath reversed() const {
    return PiecewisePath(std::vector<Matrix>(breakpoints.rbegin(), breakpoints.rend()));
  }
};

struct PathCertificate {
  double outer_distance = 0.0;
  double length = 0.0;
  double ratio = 1.0;
  double certified_bound = 1.0;
  BranchTrace branch_trace;
  double max_relative_residual = 0.0;
  int samples_per_segment = 32;

  bool fallback() const { return has_fallback(branch_trace); }
  bool holds(double slack = 1e-9) const { return fallback() || ratio <= certified_bound + slack; }
};

struct BuildOptions {
  /// |<p,q>| <= orth_tol * |p| |q| selects the orthogonal branch.
  double orth_tol = 1e-8;
  int samples_per_segment = 32;
};

/// Branch precondition failed; the dispatcher should pick another branch.
class BranchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Straight segment to the cone point.
inline PiecewisePath radial_path(const Matrix& p) {
  if (p.is_zero()) return PiecewisePath({p});
  return PiecewisePath({p, Matrix::zeros(p.rows(), p.cols(), p.field())});
}

inline bool nearly_orthogonal(const Matrix& p, const Matrix& q, double orth_tol) {
  return std::abs(frobenius_inner(p, q)) <= orth_tol * p.frobenius_norm() * q.frobenius_norm();
}

/// Two legs through the origin; valid for (nearly) orthogonal p, q.
inline PiecewisePath orthogonal_path(const Matrix& p, const Matrix& q, double orth_tol = BuildOptions{}.orth_tol) {
  Matrix::check_compatible(p, q);
  if (!nearly_orthogonal(p, q, orth_tol)) throw BranchError("orthogonal_path: <p,q> above orthogonality threshold");
  std::vector<Matrix> pts;
  if (!p.is_zero()) pts.push_back(p);
  pts.push_back(Matrix::zeros(p.rows(), p.cols(), p.field()));
  if (!q.is_zero()) pts.push_back(q);
  return PiecewisePath(std::move(pts));
}

struct NormalizedPair {
  UnitaryPair pair;  // p_hat = U p V, q_hat = U q V
  Matrix p_hat;
  Matrix q_hat;
};

/// Unitary coordinates in which p's first column is p11 e1 and q's first row
/// is q11 e1^T, both corners nonzero.
///
/// With (mu, w) the leading eigenpair of p q*, U maps w to e1 and V has first
/// column b1 = q* w / |q* w|. Then p b1 = (mu / |q* w|) w and w* q = |q* w| b1*.
inline NormalizedPair normalize_pair(const Matrix& p, const Matrix& q, double orth_tol = BuildOptions{}.orth_tol) {
  Matrix::check_compatible(p, q);
  if (p.is_zero() || q.is_zero() || nearly_orthogonal(p, q, orth_tol))
    throw BranchError("normalize_pair requires <p,q> != 0");
  const Matrix pq = p.matmul(q.adjoint());
  const Eigenpair ep = leading_nonzero_eigenpair(pq, orth_tol / static_cast<double>(p.rows()));

  const Matrix U = unitary_completion(ep.vector, CompletionSide::FirstRow, p.field());
  DenseVector qw = q.dense().adjoint() * ep.vector;
  const double qw_norm = qw.norm();
  if (qw_norm == 0.0) throw NoUsableEigenpair("q* w vanished");
  const Matrix V = unitary_completion(qw / qw_norm, CompletionSide::FirstColumn, p.field());

  UnitaryPair pair = UnitaryPair::make(U, V);
  Matrix p_hat = pair.apply(p);
  Matrix q_hat = pair.apply(q);
  return NormalizedPair{std::move(pair), std::move(p_hat), std::move(q_hat)};
}

/// Applies x -> U x V to every breakpoint.
inline PiecewisePath conjugate_path(const PiecewisePath& path, const UnitaryPair& pair) {
  std::vector<Matrix> pts;
  pts.reserve(path.size());
  for (const auto& b : path.breakpoints) {
    if (pair.U.cols() != b.rows() || pair.V.rows() != b.cols())
      throw DimensionError("conjugate_path: unitary pair does not match breakpoint shape");
    pts.push_back(pair.apply(b));
  }
  return PiecewisePath(std::move(pts));
}

namespace detail {

struct Construction {
  PiecewisePath path;
  BranchTrace trace;
  double bound = 1.0;  // a-priori ratio bound; meaningless if trace has a fallback
};

inline bool collinear(const Matrix& p, const Matrix& q) {
  // q lies on the complex (or real) line through p and the origin.
  const double pp = p.frobenius_norm();
  const double qq = q.frobenius_norm();
  const Scalar c = frobenius_inner(q, p) / (pp * pp);
  const double off = (q.dense() - c * p.dense()).norm();
  return off <= 1e-13 * qq;
}

inline Matrix corner_embed(const Matrix& block, Scalar corner) {
  DenseMatrix out = DenseMatrix::Zero(block.rows() + 1, block.cols() + 1);
  out(0, 0) = corner;
  out.bottomRightCorner(block.rows(), block.cols()) = block.dense();
  return Matrix(std::move(out), block.field());
}

/// Trailing (m-1) x (n-1) block with rounding noise removed: singular values
/// beyond max_rank, or below kDefaultRankTol * scale, are dropped.
inline Matrix trailing_block(const Matrix& a, int max_rank, double scale) {
  Matrix block(a.dense().bottomRightCorner(a.rows() - 1, a.cols() - 1), a.field());
  const Svd s = svd(block, true);
  const double cut = kDefaultRankTol * scale;
  int keep = 0;
  while (keep < max_rank && static_cast<std::size_t>(keep) < s.sigma.size() &&
         s.sigma[static_cast<std::size_t>(keep)] > cut)
    ++keep;
  if (static_cast<std::size_t>(keep) == s.sigma.size() || s.sigma[static_cast<std::size_t>(keep)] == 0.0)
    return block;
  DenseMatrix out = DenseMatrix::Zero(block.rows(), block.cols());
  for (Index i = 0; i < keep; ++i) out += s.sigma[static_cast<std::size_t>(i)] * s.U.col(i) * s.V.col(i).adjoint();
  if (a.field() == ScalarField::Real) out = out.real().cast<Scalar>();
  return Matrix(std::move(out), a.field());
}

inline void push_distinct(std::vector<Matrix>& pts, Matrix x, double eps) {
  if (!pts.empty() && frobenius_distance(pts.back(), x) <= eps) return;
  pts.push_back(std::move(x));
}

Construction construct(const Matrix& p, const Matrix& q, const VarietyDescriptor& d, int depth,
                       const BuildOptions& opts, double scale);

/// p has rank rank_p <= rank_q of q; `scale` is the norm scale of the root pair.
inline Construction construct_general(const Matrix& p, const Matrix& q, int rank_p, int rank_q,
                                      const VarietyDescriptor& d, int depth, const BuildOptions& opts,
                                      double scale) {
  const NormalizedPair np = normalize_pair(p, q, opts.orth_tol);
  const Scalar corner = np.q_hat(0, 0);
  const VarietyDescriptor slice(d.m - 1, d.n - 1, d.t - 1, d.field);
  Construction sub = construct(trailing_block(np.p_hat, rank_p - 1, scale),
                               trailing_block(np.q_hat, rank_q - 1, scale), slice, depth + 1, opts, scale);

  const double eps = 1e-14 * scale;
  const UnitaryPair back = np.pair.inverse();

  std::vector<Matrix> pts;
  pts.reserve(sub.path.size() + 2);
  pts.push_back(p);
  for (const auto& b : sub.path.breakpoints) push_distinct(pts, back.apply(corner_embed(b, corner)), eps);
  if (pts.size() > 1 && frobenius_distance(pts.back(), q) <= eps) pts.pop_back();
  push_distinct(pts, q, 0.0);

  Construction out{PiecewisePath(std::move(pts)), {BranchTag{BranchKind::General, depth}}, 1.0};
  out.trace.insert(out.trace.end(), sub.trace.begin(), sub.trace.end());
  return out;
}

inline Construction construct(const Matrix& p, const Matrix& q, const VarietyDescriptor& d, int depth,
                              const BuildOptions& opts, double scale) {
  if (frobenius_distance(p, q) == 0.0) return {PiecewisePath({p}), {}, 1.0};

  if (p.is_zero() || q.is_zero() || collinear(p, q))
    return {PiecewisePath({p, q}), {BranchTag{BranchKind::Radial, depth}}, 1.0};

  if (nearly_orthogonal(p, q, opts.orth_tol))
    return {orthogonal_path(p, q, opts.orth_tol), {BranchTag{BranchKind::Orthogonal, depth}}, 2.0};

  const int rp = numerical_rank(p);
  const int rq = numerical_rank(q);
  try {
    Construction c = rq < rp ? construct_general(q, p, rq, rp, d, depth, opts, scale)
                             : construct_general(p, q, rp, rq, d, depth, opts, scale);
    if (rq < rp) c.path = c.path.reversed();
    c.bound = 2.0 * std::min(rp, rq);
    return c;
  } catch (const NoUsableEigenpair&) {
    std::vector<Matrix> pts{p, Matrix::zeros(p.rows(), p.cols(), p.field()), q};
    return {PiecewisePath(std::move(pts)), {BranchTag{BranchKind::RealFallback, depth}}, 0.0};
  }
}

}  // namespace detail

/// Rank-recursive path for a non-orthogonal pair (the caller has already
/// ruled out zero, collinear, and orthogonal pairs). Throws NoUsableEigenpair
/// when a real-field pair admits no real normalizing coordinates.
inline PiecewisePath general_path(const Matrix& p, const Matrix& q, const VarietyDescriptor& d,
                                  const BuildOptions& opts = {}) {
  check_shape(p, d);
  check_shape(q, d);
  const int rp = numerical_rank(p);
  const int rq = numerical_rank(q);
  if (rq < rp) throw BranchError("general_path pivots on the lower-rank endpoint; swap the arguments");
  const double scale = std::max(p.frobenius_norm(), q.frobenius_norm());
  return detail::construct_general(p, q, rp, rq, d, 0, opts, scale).path;
}

/// Samples every segment at samples_per_segment interior points (plus the
/// endpoints) and records the worst residual together with the metric data.
template <class ResidualFn>
PathCertificate certify_with(const PiecewisePath& path, ResidualFn&& residual, int samples_per_segment,
                             BranchTrace trace, double certified_bound) {
  if (path.size() == 0) throw std::invalid_argument("certify: empty path");
  if (samples_per_segment < 1) throw std::invalid_argument("certify: samples_per_segment must be positive");
  PathCertificate c;
  c.samples_per_segment = samples_per_segment;
  c.branch_trace = std::move(trace);
  c.length = path.length();
  c.outer_distance = frobenius_distance(path.front(), path.back());
  c.ratio = c.outer_distance > 0.0 ? std::max(1.0, c.length / c.outer_distance) : 1.0;

  double worst = residual(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Matrix& a = path.breakpoints[i - 1];
    const Matrix& b = path.breakpoints[i];
    for (int k = 1; k <= samples_per_segment + 1; ++k) {
      const double s = static_cast<double>(k) / (samples_per_segment + 1);
      worst = std::max(worst, residual(a.lerp(b, s)));
    }
  }
  c.max_relative_residual = worst;
  // A fallback path carries no a-priori bound; report what it achieved.
  c.certified_bound = has_fallback(c.branch_trace) ? c.ratio : certified_bound;
  return c;
}

inline PathCertificate certify(const PiecewisePath& path, const VarietyDescriptor& d, int samples_per_segment = 32,
                               BranchTrace trace = {}, double certified_bound = 1.0) {
  return certify_with(
      path, [&d](const Matrix& x) { return membership_residual(x, d); }, samples_per_segment, std::move(trace),
      certified_bound);
}

struct BuiltPath {
  PiecewisePath path;
  PathCertificate certificate;
};

/// Certified path between two members of d.
inline BuiltPath build_path(const Matrix& p, const Matrix& q, const VarietyDescriptor& d,
                            const BuildOptions& opts = {}) {
  check_shape(p, d);
  check_shape(q, d);
  for (const Matrix* x : {&p, &q}) {
    const double r = membership_residual(*x, d);
    if (r > kDefaultMembershipTol)
      throw MembershipError("point is not on the variety (relative residual " + std::to_string(r) + ")", r);
  }
  const double scale = std::max(p.frobenius_norm(), q.frobenius_norm());
  detail::Construction c = detail::construct(p, q, d, 0, opts, scale);
  PathCertificate cert = certify(c.path, d, opts.samples_per_segment, std::move(c.trace), c.bound);
  return {std::move(c.path), std::move(cert)};
}

}  // namespace rankpath
