#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace rankpath;

namespace {

const double kPi = std::numbers::pi;

Matrix circle_point(double angle, double radius = 1.0) {
  return Matrix::real({{radius * std::cos(angle)}, {radius * std::sin(angle)}});
}

/// Straight segments in R^k, constant 1.
CertifiedBuilder line_builder(Index k) {
  CertifiedBuilder b;
  b.constant = 1.0;
  b.ambient_dimension = k;
  b.residual = [](const Matrix&) { return 0.0; };
  b.build = [res = b.residual](const Matrix& x, const Matrix& y) {
    PiecewisePath path({x, y});
    return BuiltPath{path, certify_with(path, res, 4, {}, 1.0)};
  };
  return b;
}

Matrix concat(const Matrix& a, const Matrix& b) {
  DenseMatrix v(a.rows() + b.rows(), 1);
  v << a.dense(), b.dense();
  return Matrix(v, a.field());
}

}  // namespace

TEST(Flatten, RoundTripAndIsometry) {
  std::mt19937_64 rng(1);
  const VarietyDescriptor d(3, 4, 3);
  Matrix a = sample_stratum_with(d, 2, 1.0, rng);
  Matrix b = sample_stratum_with(d, 1, 2.0, rng);
  EXPECT_EQ(unflatten(flatten(a), 3, 4), a);
  EXPECT_NEAR(frobenius_distance(flatten(a), flatten(b)), frobenius_distance(a, b), 1e-15);
  EXPECT_EQ(flatten(Matrix::real({{1, 2}, {3, 4}}))(1, 0), Scalar(2.0));
  EXPECT_THROW(unflatten(flatten(a), 4, 4), DimensionError);
}

TEST(CircleLink, AntipodalArc) {
  CertifiedBuilder c = circle_link_builder();
  BuiltPath b = c.build(circle_point(0.0), circle_point(kPi));
  EXPECT_NEAR(b.certificate.outer_distance, 2.0, 1e-15);
  EXPECT_NEAR(b.certificate.length, kPi, 1e-6);
  EXPECT_LE(b.certificate.ratio, kPi / 2 + 1e-12);
  EXPECT_LE(b.certificate.max_relative_residual, 1e-6);
}

TEST(ProductBuilder, SameFirstFactorIsSingleLeg) {
  CertifiedBuilder x = matrix_variety_builder(VarietyDescriptor(2, 2, 2));
  CertifiedBuilder y = matrix_variety_builder(VarietyDescriptor(2, 2, 2));
  CertifiedBuilder z = product_builder(x, y);
  EXPECT_EQ(z.constant, 4.0);
  EXPECT_EQ(z.ambient_dimension, 8);
  std::mt19937_64 rng(2);
  const VarietyDescriptor d(2, 2, 2);
  for (int k = 0; k < 20; ++k) {
    Matrix x1 = flatten(sample_stratum_with(d, 1, 1.0, rng));
    Matrix y1 = flatten(sample_stratum_with(d, 1, 1.0, rng));
    Matrix y2 = flatten(sample_stratum_with(d, 1, 1.0, rng));
    BuiltPath direct = y.build(y1, y2);
    BuiltPath b = z.build(concat(x1, y1), concat(x1, y2));
    EXPECT_NEAR(b.certificate.length, direct.certificate.length, 1e-12);
    EXPECT_LE(b.certificate.ratio, y.constant + 1e-9);
  }
}

TEST(ProductBuilder, StraightLegsGiveRightAngleBound) {
  CertifiedBuilder z = product_builder(line_builder(2), line_builder(3));
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    Matrix p(gaussian_matrix(5, 1, ScalarField::Real, rng), ScalarField::Real);
    Matrix q(gaussian_matrix(5, 1, ScalarField::Real, rng), ScalarField::Real);
    BuiltPath b = z.build(p, q);
    EXPECT_LE(b.certificate.ratio, std::sqrt(2.0) + 1e-12);
    EXPECT_LE(b.certificate.ratio, 2.0);
    EXPECT_LT(frobenius_distance(b.path.front(), p), 1e-15);
    EXPECT_LT(frobenius_distance(b.path.back(), q), 1e-15);
  }
}

TEST(ProductBuilder, MatrixFactorsStayUnderSumOfConstants) {
  const VarietyDescriptor d(2, 2, 2);
  CertifiedBuilder z = product_builder(matrix_variety_builder(d), matrix_variety_builder(d));
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> rank(0, 1);
  for (int k = 0; k < 500; ++k) {
    Matrix p = concat(flatten(sample_stratum_with(d, rank(rng), 1.0, rng)), flatten(sample_stratum_with(d, rank(rng), 1.0, rng)));
    Matrix q = concat(flatten(sample_stratum_with(d, rank(rng), 1.0, rng)), flatten(sample_stratum_with(d, rank(rng), 1.0, rng)));
    BuiltPath b = z.build(p, q);
    ASSERT_LE(b.certificate.ratio, 4.0 + 1e-9);
    ASSERT_LE(b.certificate.max_relative_residual, 1e-8);
  }
}

TEST(ProductBuilder, RejectsWrongBlocks) {
  CertifiedBuilder z = product_builder(line_builder(2), line_builder(2));
  Matrix p(DenseMatrix::Zero(3, 1), ScalarField::Real);
  EXPECT_THROW(z.build(p, p), DimensionError);
}

TEST(ConeBuilder, RadialPairs) {
  CertifiedBuilder c = cone_builder(circle_link_builder());
  EXPECT_NEAR(c.constant, kPi / 2 + 1, 1e-15);
  for (double lambda : {0.0, 0.25, 0.5, 1.0}) {
    Matrix x = circle_point(0.7, 2.0);
    BuiltPath b = c.build(x, x * lambda);
    EXPECT_NEAR(b.certificate.ratio, 1.0, 1e-12);
    BuiltPath r = c.build(x * lambda, x);
    EXPECT_NEAR(r.certificate.ratio, 1.0, 1e-12);
  }
}

TEST(ConeBuilder, AntipodalAtEqualRadius) {
  CertifiedBuilder c = cone_builder(circle_link_builder());
  for (double r : {0.5, 1.0, 3.0}) {
    BuiltPath b = c.build(circle_point(0.3, r), circle_point(0.3 + kPi, r));
    EXPECT_NEAR(b.certificate.outer_distance, 2 * r, 1e-14);
    EXPECT_NEAR(b.certificate.length, kPi * r, 1e-6 * r);
    EXPECT_NEAR(b.certificate.ratio, kPi / 2, 1e-6);
  }
}

TEST(ConeBuilder, ArcRunsOnTheSmallerSphere) {
  CertifiedBuilder c = cone_builder(circle_link_builder());
  Matrix x = circle_point(0.0, 3.0), y = circle_point(kPi, 0.01);
  for (const BuiltPath& b : {c.build(x, y), c.build(y, x)}) {
    // radial leg 2.99 plus half a turn at radius 0.01
    EXPECT_NEAR(b.certificate.length, 2.99 + kPi * 0.01, 1e-6);
    EXPECT_NEAR(b.certificate.outer_distance, 3.01, 1e-14);
  }
}

TEST(ConeBuilder, SampledPairs) {
  CertifiedBuilder c = cone_builder(circle_link_builder());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(-kPi, kPi), radius(0.01, 3.0);
  for (int k = 0; k < 500; ++k) {
    Matrix x = circle_point(angle(rng), radius(rng));
    Matrix y = circle_point(angle(rng), radius(rng));
    BuiltPath b = c.build(x, y);
    ASSERT_LE(b.certificate.ratio, kPi / 2 + 1 + 1e-9);
    EXPECT_LT(frobenius_distance(b.path.front(), x), 1e-15);
    EXPECT_LT(frobenius_distance(b.path.back(), y), 1e-15);
  }
}

TEST(ConeBuilder, AgreesWithMatrixBuilderOnEqualNorms) {
  // The rank variety is a cone over its link, so the matrix builder serves as
  // a link builder on unit-norm points.
  const VarietyDescriptor d(3, 3, 2);
  CertifiedBuilder link = matrix_variety_builder(d);
  CertifiedBuilder cone = cone_builder(link);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    Matrix p = sample_stratum_with(d, 1, 1.7, rng);
    Matrix q = sample_stratum_with(d, 1, 1.7, rng);
    BuiltPath viaCone = cone.build(flatten(p), flatten(q));
    BuiltPath direct = build_path(p, q, d);
    EXPECT_LE(viaCone.certificate.ratio, cone.constant + 1e-9);
    EXPECT_TRUE(direct.certificate.holds());
    EXPECT_LE(viaCone.certificate.max_relative_residual, 1e-8);
    EXPECT_NEAR(viaCone.certificate.length, direct.certificate.length, 1e-9);
  }
}
