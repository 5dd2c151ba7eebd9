#pragma once

// Builders for products and cones. A builder produces a certified path
// between any two points of its space; composing builders composes their
// ratio constants (K_X + K_Y for X x Y, K_M + 1 for the cone over M).
//
// Points are column vectors (k x 1 matrices) in the ambient space. Matrix
// varieties are flattened row-major, which is an isometry for Frobenius.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "pathbuilder.hpp"

namespace rankpath {

struct CertifiedBuilder {
  std::function<BuiltPath(const Matrix&, const Matrix&)> build;
  double constant = 1.0;
  Index ambient_dimension = 1;
  std::function<double(const Matrix&)> residual;
  int samples_per_segment = 32;
};

inline Matrix flatten(const Matrix& a) {
  DenseMatrix v(a.rows() * a.cols(), 1);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) v(i * a.cols() + j, 0) = a(i, j);
  return Matrix(std::move(v), a.field());
}

inline Matrix unflatten(const Matrix& v, Index rows, Index cols) {
  if (v.cols() != 1 || v.rows() != rows * cols) throw DimensionError("unflatten: wrong vector length");
  DenseMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = v(i * cols + j, 0);
  return Matrix(std::move(a), v.field());
}

inline PiecewisePath map_path(const PiecewisePath& path, const std::function<Matrix(const Matrix&)>& f) {
  std::vector<Matrix> pts;
  pts.reserve(path.size());
  for (const auto& b : path.breakpoints) pts.push_back(f(b));
  return PiecewisePath(std::move(pts));
}

/// The rank-path construction on M^t_{m,n}, acting on flattened points.
inline CertifiedBuilder matrix_variety_builder(const VarietyDescriptor& d, BuildOptions opts = {}) {
  CertifiedBuilder b;
  b.constant = std::max(1.0, 2.0 * d.t - 2.0);
  b.ambient_dimension = static_cast<Index>(d.m) * d.n;
  b.samples_per_segment = opts.samples_per_segment;
  b.residual = [d](const Matrix& v) { return membership_residual(unflatten(v, d.m, d.n), d); };
  b.build = [d, opts](const Matrix& x, const Matrix& y) {
    BuiltPath r = build_path(unflatten(x, d.m, d.n), unflatten(y, d.m, d.n), d, opts);
    r.path = map_path(r.path, flatten);
    return r;
  };
  return b;
}

/// Great-circle arcs on the unit circle in R^2, drawn as fine polylines.
/// Arc over chord is at most pi/2 (antipodal points).
inline CertifiedBuilder circle_link_builder(int segments_per_half_turn = 4096) {
  CertifiedBuilder b;
  b.constant = std::numbers::pi / 2.0;
  b.ambient_dimension = 2;
  b.residual = [](const Matrix& v) { return std::abs(v.frobenius_norm() - 1.0); };
  b.build = [segments_per_half_turn, res = b.residual](const Matrix& x, const Matrix& y) {
    if (x.rows() != 2 || x.cols() != 1 || !x.same_shape(y)) throw DimensionError("circle points are 2x1");
    const double ax = std::atan2(x(1, 0).real(), x(0, 0).real());
    const double ay = std::atan2(y(1, 0).real(), y(0, 0).real());
    double sweep = std::remainder(ay - ax, 2.0 * std::numbers::pi);  // in [-pi, pi]
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) / std::numbers::pi * segments_per_half_turn)));
    std::vector<Matrix> pts;
    pts.reserve(static_cast<std::size_t>(n) + 1);
    pts.push_back(x);
    for (int k = 1; k < n; ++k) {
      const double a = ax + sweep * k / n;
      pts.push_back(Matrix::real({{std::cos(a)}, {std::sin(a)}}));
    }
    if (frobenius_distance(x, y) > 0.0) pts.push_back(y);
    PiecewisePath path(std::move(pts));
    PathCertificate cert = certify_with(path, res, 4, {}, std::numbers::pi / 2.0);
    return BuiltPath{std::move(path), std::move(cert)};
  };
  return b;
}

/// Route (x1,y1) -> (x1,y2) -> (x2,y2): a Y-leg in the slice {x1} x Y, then
/// an X-leg in X x {y2}. Constant K_X + K_Y.
inline CertifiedBuilder product_builder(CertifiedBuilder bx, CertifiedBuilder by) {
  CertifiedBuilder z;
  const Index dx = bx.ambient_dimension;
  const Index dy = by.ambient_dimension;
  z.constant = bx.constant + by.constant;
  z.ambient_dimension = dx + dy;
  z.samples_per_segment = std::max(bx.samples_per_segment, by.samples_per_segment);

  auto split = [dx, dy](const Matrix& p) {
    if (p.cols() != 1 || p.rows() != dx + dy) throw DimensionError("product point has the wrong block sizes");
    return std::pair{Matrix(p.dense().topRows(dx), p.field()), Matrix(p.dense().bottomRows(dy), p.field())};
  };
  auto join = [](const Matrix& x, const Matrix& y) {
    DenseMatrix v(x.rows() + y.rows(), 1);
    v << x.dense(), y.dense();
    return Matrix(std::move(v), x.field());
  };

  z.residual = [split, rx = bx.residual, ry = by.residual](const Matrix& p) {
    auto [x, y] = split(p);
    return std::max(rx(x), ry(y));
  };
  z.build = [bx, by, split, join, res = z.residual, constant = z.constant,
             samples = z.samples_per_segment](const Matrix& p, const Matrix& q) {
    auto [x1, y1] = split(p);
    auto [x2, y2] = split(q);
    std::vector<Matrix> pts;
    BranchTrace trace;

    BuiltPath ly = by.build(y1, y2);
    for (const auto& y : ly.path.breakpoints) pts.push_back(join(x1, y));
    trace.insert(trace.end(), ly.certificate.branch_trace.begin(), ly.certificate.branch_trace.end());

    BuiltPath lx = bx.build(x1, x2);
    for (std::size_t i = 1; i < lx.path.size(); ++i) pts.push_back(join(lx.path.breakpoints[i], y2));
    trace.insert(trace.end(), lx.certificate.branch_trace.begin(), lx.certificate.branch_trace.end());

    PiecewisePath path(std::move(pts));
    PathCertificate cert = certify_with(path, res, samples, std::move(trace), constant);
    return BuiltPath{std::move(path), std::move(cert)};
  };
  return z;
}

/// Cone over a link. For |x| <= |y| the route is: the link path from x to
/// y' = y |x|/|y| on the sphere of radius |x|, then the radial segment y' -> y.
/// Constant K_M + 1.
///
/// `link.build` is called on radius-one points; link_radius_of gives the
/// cone coordinate of an ambient point.
inline CertifiedBuilder cone_builder(CertifiedBuilder link,
                                     std::function<double(const Matrix&)> link_radius_of = [](const Matrix& v) {
                                       return v.frobenius_norm();
                                     }) {
  CertifiedBuilder c;
  c.constant = link.constant + 1.0;
  c.ambient_dimension = link.ambient_dimension;
  c.samples_per_segment = link.samples_per_segment;
  c.residual = [lres = link.residual, link_radius_of](const Matrix& v) {
    const double r = link_radius_of(v);
    return r > 0.0 ? lres(v * (1.0 / r)) : 0.0;
  };
  c.build = [link, link_radius_of, res = c.residual, constant = c.constant,
             samples = c.samples_per_segment](const Matrix& a, const Matrix& b) {
    const bool swapped = link_radius_of(a) > link_radius_of(b);
    const Matrix& x = swapped ? b : a;
    const Matrix& y = swapped ? a : b;
    const double rx = link_radius_of(x);
    const double ry = link_radius_of(y);

    std::vector<Matrix> pts;
    BranchTrace trace;
    if (ry == 0.0) {
      pts.push_back(x);
    } else if (rx == 0.0) {
      pts = {x, y};
      trace.push_back(BranchTag{BranchKind::Radial, 0});
    } else {
      const Matrix y_lift = y * (rx / ry);
      BuiltPath lp = link.build(x * (1.0 / rx), y_lift * (1.0 / rx));
      for (const auto& m : lp.path.breakpoints) pts.push_back(m * rx);
      pts.back() = y_lift;
      trace = lp.certificate.branch_trace;
      if (frobenius_distance(y_lift, y) > 0.0) {
        pts.push_back(y);
        trace.push_back(BranchTag{BranchKind::Radial, 0});
      }
    }
    PiecewisePath path(std::move(pts));
    if (swapped) path = path.reversed();
    PathCertificate cert = certify_with(path, res, samples, std::move(trace), constant);
    return BuiltPath{std::move(path), std::move(cert)};
  };
  return c;
}

}  // namespace rankpath
