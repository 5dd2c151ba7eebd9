#pragma once

// Dense real/complex matrices tagged with their scalar field, the Frobenius
// metric, and the small decompositions used by the rest of the library.
// Storage and factorizations are delegated to Eigen.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rankpath {

using Scalar = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;
using Index = Eigen::Index;

enum class ScalarField { Real, Complex };

inline const char* to_string(ScalarField f) { return f == ScalarField::Real ? "real" : "complex"; }

inline ScalarField field_from_string(const std::string& s) {
  if (s == "real") return ScalarField::Real;
  if (s == "complex") return ScalarField::Complex;
  throw std::invalid_argument("unknown scalar field '" + s + "'");
}

/// Shape or field mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by unitary_completion for inputs that are not unit vectors.
class NormalizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No eigenvalue clears the magnitude threshold (or, over the reals, no real
/// one does). Callers treat this as a branch signal rather than a failure.
class NoUsableEigenpair : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense m x n matrix over R or C. Real matrices are stored in complex form
/// with every imaginary part exactly zero.
class Matrix {
 public:
  Matrix() : Matrix(1, 1, ScalarField::Real) {}

  Matrix(Index rows, Index cols, ScalarField field = ScalarField::Real)
      : data_(DenseMatrix::Zero(rows, cols)), field_(field) {
    if (rows <= 0 || cols <= 0) throw DimensionError("matrix dimensions must be positive");
  }

  Matrix(DenseMatrix data, ScalarField field) : data_(std::move(data)), field_(field) {
    if (data_.rows() <= 0 || data_.cols() <= 0) throw DimensionError("matrix dimensions must be positive");
    if (field_ == ScalarField::Real) {
      for (Index i = 0; i < data_.size(); ++i) {
        if (data_.data()[i].imag() != 0.0)
          throw DimensionError("real-field matrix with nonzero imaginary part");
      }
    }
  }

  static Matrix real(const Eigen::MatrixXd& a) { return Matrix(a.cast<Scalar>(), ScalarField::Real); }
  static Matrix complex(DenseMatrix a) { return Matrix(std::move(a), ScalarField::Complex); }

  /// Row-major construction from nested initializer lists of reals.
  static Matrix real(std::initializer_list<std::initializer_list<double>> rows) {
    const Index m = static_cast<Index>(rows.size());
    const Index n = m > 0 ? static_cast<Index>(rows.begin()->size()) : 0;
    Eigen::MatrixXd a(m, n);
    Index i = 0;
    for (const auto& r : rows) {
      if (static_cast<Index>(r.size()) != n) throw DimensionError("ragged matrix literal");
      Index j = 0;
      for (double v : r) a(i, j++) = v;
      ++i;
    }
    return real(a);
  }

  static Matrix identity(Index n, ScalarField field = ScalarField::Real) {
    return Matrix(DenseMatrix::Identity(n, n), field);
  }

  static Matrix zeros(Index rows, Index cols, ScalarField field = ScalarField::Real) {
    return Matrix(rows, cols, field);
  }

  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  ScalarField field() const { return field_; }
  const DenseMatrix& dense() const { return data_; }

  Scalar operator()(Index i, Index j) const { return data_(i, j); }

  void set(Index i, Index j, Scalar v) {
    if (field_ == ScalarField::Real && v.imag() != 0.0)
      throw DimensionError("complex value written into real-field matrix");
    data_(i, j) = v;
  }

  bool same_shape(const Matrix& o) const { return rows() == o.rows() && cols() == o.cols(); }
  bool is_zero() const { return data_.isZero(0.0); }

  Matrix operator+(const Matrix& o) const {
    check_compatible(*this, o);
    return Matrix(data_ + o.data_, field_, Unchecked{});
  }
  Matrix operator-(const Matrix& o) const {
    check_compatible(*this, o);
    return Matrix(data_ - o.data_, field_, Unchecked{});
  }
  Matrix operator*(double s) const { return Matrix(data_ * s, field_, Unchecked{}); }
  friend Matrix operator*(double s, const Matrix& a) { return a * s; }

  /// Scaling by a complex number; rejected on real matrices unless s is real.
  Matrix scaled(Scalar s) const {
    if (field_ == ScalarField::Real && s.imag() != 0.0)
      throw DimensionError("complex scaling of a real-field matrix");
    return Matrix(data_ * s, field_, Unchecked{});
  }

  Matrix adjoint() const { return Matrix(data_.adjoint(), field_, Unchecked{}); }

  /// Matrix product; both factors must share a field.
  Matrix matmul(const Matrix& o) const {
    if (field_ != o.field_) throw DimensionError("matrix product across scalar fields");
    if (cols() != o.rows()) throw DimensionError("matrix product shape mismatch");
    return Matrix(data_ * o.data_, field_, Unchecked{});
  }

  /// Affine combination (1-s)*this + s*o.
  Matrix lerp(const Matrix& o, double s) const {
    check_compatible(*this, o);
    return Matrix((1.0 - s) * data_ + s * o.data_, field_, Unchecked{});
  }

  double frobenius_norm() const { return data_.norm(); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.field_ == b.field_ && a.same_shape(b) && a.data_ == b.data_;
  }

  static void check_compatible(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
      throw DimensionError("shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                           " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    if (a.field() != b.field()) throw DimensionError("scalar field mismatch");
  }

 private:
  struct Unchecked {};
  Matrix(DenseMatrix data, ScalarField field, Unchecked) : data_(std::move(data)), field_(field) {
    if (field_ == ScalarField::Real) data_ = data_.real().cast<Scalar>();
  }

  DenseMatrix data_;
  ScalarField field_;
};

/// Left/right unitary factors of a coordinate change x -> U x V.
struct UnitaryPair {
  Matrix U;
  Matrix V;
  double unitarity_residual = 0.0;

  static UnitaryPair make(Matrix u, Matrix v) {
    auto defect = [](const Matrix& a) {
      const DenseMatrix& d = a.dense();
      return (d * d.adjoint() - DenseMatrix::Identity(d.rows(), d.cols())).norm();
    };
    if (u.rows() != u.cols() || v.rows() != v.cols()) throw DimensionError("unitary factors must be square");
    double r = std::max(defect(u), defect(v));
    return UnitaryPair{std::move(u), std::move(v), r};
  }

  static UnitaryPair identity(Index m, Index n, ScalarField field) {
    return make(Matrix::identity(m, field), Matrix::identity(n, field));
  }

  Matrix apply(const Matrix& x) const { return U.matmul(x).matmul(V); }
  UnitaryPair inverse() const { return UnitaryPair{U.adjoint(), V.adjoint(), unitarity_residual}; }
};

/// Frobenius inner product sum_ij a_ij * conj(b_ij).
inline Scalar frobenius_inner(const Matrix& a, const Matrix& b) {
  Matrix::check_compatible(a, b);
  // Eigen's dot conjugates its first argument.
  return b.dense().reshaped().dot(a.dense().reshaped());
}

inline double frobenius_distance(const Matrix& a, const Matrix& b) {
  Matrix::check_compatible(a, b);
  return (a.dense() - b.dense()).norm();
}

struct Svd {
  std::vector<double> sigma;  // nonincreasing, length min(m, n)
  DenseMatrix U;              // m x k
  DenseMatrix V;              // n x k
};

/// Thin SVD. Real-field inputs are factored over R so truncations stay real.
inline Svd svd(const Matrix& a, bool with_vectors = true) {
  Svd out;
  const int opts = with_vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0;
  if (a.field() == ScalarField::Real) {
    Eigen::JacobiSVD<Eigen::MatrixXd> s(a.dense().real(), opts);
    const auto& sv = s.singularValues();
    out.sigma.assign(sv.data(), sv.data() + sv.size());
    if (with_vectors) {
      out.U = s.matrixU().cast<Scalar>();
      out.V = s.matrixV().cast<Scalar>();
    }
  } else {
    Eigen::JacobiSVD<DenseMatrix> s(a.dense(), opts);
    const auto& sv = s.singularValues();
    out.sigma.assign(sv.data(), sv.data() + sv.size());
    if (with_vectors) {
      out.U = s.matrixU();
      out.V = s.matrixV();
    }
  }
  return out;
}

inline std::vector<double> singular_values(const Matrix& a) { return svd(a, false).sigma; }

inline constexpr double kDefaultRankTol = 1e-10;

/// Number of singular values above rel_tol * sigma_1.
inline int numerical_rank(const std::vector<double>& sigma, double rel_tol = kDefaultRankTol) {
  if (sigma.empty() || sigma.front() <= 0.0) return 0;
  const double cut = rel_tol * sigma.front();
  return static_cast<int>(std::count_if(sigma.begin(), sigma.end(), [cut](double s) { return s > cut; }));
}

inline int numerical_rank(const Matrix& a, double rel_tol = kDefaultRankTol) {
  return numerical_rank(singular_values(a), rel_tol);
}

enum class CompletionSide { FirstRow, FirstColumn };

/// Householder completion of a unit vector to a unitary matrix.
///
/// FirstColumn: Q e1 = w. FirstRow: U w = e1 (so row 1 of U is w*).
/// Over R the result is real orthogonal.
inline Matrix unitary_completion(const DenseVector& w_in, CompletionSide side,
                                 ScalarField field = ScalarField::Complex) {
  const Index k = w_in.size();
  if (k == 0) throw DimensionError("empty vector");
  const double nrm = w_in.norm();
  if (!(std::abs(nrm - 1.0) <= 1e-12)) throw NormalizationError("unitary_completion needs a unit vector, got norm " + std::to_string(nrm));
  DenseVector w = w_in / nrm;

  // Phase-align w so its first entry is real and nonnegative, then reflect
  // e1 onto it. Q = phase * H with H the reflector swapping e1 and x.
  const double a0 = std::abs(w(0));
  const Scalar phase = a0 > 0.0 ? w(0) / a0 : Scalar(1.0);
  DenseVector x = w / phase;
  x(0) = Scalar(std::abs(x(0)), 0.0);

  DenseMatrix Q = DenseMatrix::Identity(k, k);
  const double tail2 = k > 1 ? x.tail(k - 1).squaredNorm() : 0.0;
  if (tail2 > 0.0) {
    DenseVector v = x;
    // x0 - 1 without cancellation
    v(0) = Scalar(-tail2 / (1.0 + x(0).real()), 0.0);
    const double vv = v.squaredNorm();
    Q -= (2.0 / vv) * v * v.adjoint();
  }
  Q *= phase;
  if (field == ScalarField::Real) Q = Q.real().cast<Scalar>();

  if (side == CompletionSide::FirstRow) Q.adjointInPlace();
  return Matrix(std::move(Q), field);
}

struct Eigenpair {
  Scalar value;
  DenseVector vector;  // unit norm
};

/// Eigenpair of largest |mu| (real mu only for Real-field input).
///
/// Ties in |mu| go to the lexicographically largest (re, im), then the lowest
/// index. Throws NoUsableEigenpair if the winner has |mu| below
/// min_rel_magnitude * ||M||_F or the eigenvector residual cannot be brought
/// under 1e-10 * ||M||_F.
inline Eigenpair leading_nonzero_eigenpair(const Matrix& M, double min_rel_magnitude) {
  if (M.rows() != M.cols()) throw DimensionError("eigenpair of a non-square matrix");
  const Index k = M.rows();
  const double scale = M.frobenius_norm();
  if (scale == 0.0) throw NoUsableEigenpair("zero matrix has no nonzero eigenvalue");

  std::vector<Scalar> values;
  DenseMatrix vectors;
  if (M.field() == ScalarField::Real) {
    // EigenSolver works from the real Schur form; real eigenvalues come out
    // of 1x1 blocks with exactly zero imaginary part and real eigenvectors.
    Eigen::EigenSolver<Eigen::MatrixXd> es(M.dense().real(), true);
    if (es.info() != Eigen::Success) throw NoUsableEigenpair("real eigensolver did not converge");
    for (Index i = 0; i < k; ++i) values.push_back(es.eigenvalues()(i));
    vectors = es.eigenvectors();
  } else {
    Eigen::ComplexEigenSolver<DenseMatrix> es(M.dense(), true);
    if (es.info() != Eigen::Success) throw NoUsableEigenpair("complex eigensolver did not converge");
    for (Index i = 0; i < k; ++i) values.push_back(es.eigenvalues()(i));
    vectors = es.eigenvectors();
  }

  std::optional<Index> best;
  const double tie_tol = 1e-12 * scale;
  for (Index i = 0; i < k; ++i) {
    const Scalar mu = values[static_cast<std::size_t>(i)];
    if (M.field() == ScalarField::Real && mu.imag() != 0.0) continue;
    if (!best) {
      best = i;
      continue;
    }
    const Scalar cur = values[static_cast<std::size_t>(*best)];
    const double dm = std::abs(mu) - std::abs(cur);
    if (dm > tie_tol) {
      best = i;
    } else if (dm >= -tie_tol) {
      if (mu.real() > cur.real() || (mu.real() == cur.real() && mu.imag() > cur.imag())) best = i;
    }
  }
  if (!best) throw NoUsableEigenpair("no real eigenvalue");
  const Scalar mu = values[static_cast<std::size_t>(*best)];
  if (std::abs(mu) < min_rel_magnitude * scale)
    throw NoUsableEigenpair("leading eigenvalue below threshold");

  DenseVector w = vectors.col(*best);
  if (M.field() == ScalarField::Real) w = w.real().cast<Scalar>();
  w.normalize();

  const DenseMatrix& A = M.dense();
  auto residual = [&](const DenseVector& v) { return (A * v - mu * v).norm(); };
  // A few steps of inverse iteration if the solver's vector is loose.
  for (int it = 0; it < 3 && residual(w) > 1e-10 * scale; ++it) {
    DenseMatrix shifted = A - (mu * (1.0 + 1e-14)) * DenseMatrix::Identity(k, k);
    DenseVector next = shifted.fullPivLu().solve(w);
    if (!next.allFinite() || next.norm() == 0.0) break;
    w = next.normalized();
    if (M.field() == ScalarField::Real) w = w.real().cast<Scalar>().normalized();
  }
  if (residual(w) > 1e-10 * scale) throw NoUsableEigenpair("eigenvector residual too large");
  return Eigenpair{mu, std::move(w)};
}

}  // namespace rankpath
