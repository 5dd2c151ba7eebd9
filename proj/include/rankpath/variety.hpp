#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "numkernel.hpp"

namespace rankpath {

/// The set of m x n matrices of rank < t over the given field.
struct VarietyDescriptor {
  int m = 1;
  int n = 1;
  int t = 1;
  ScalarField field = ScalarField::Complex;

  VarietyDescriptor() = default;
  VarietyDescriptor(int m_, int n_, int t_, ScalarField f = ScalarField::Complex) : m(m_), n(n_), t(t_), field(f) {
    validate();
  }

  void validate() const {
    if (m < 1 || n < 1) throw std::invalid_argument("descriptor dimensions must be positive");
    if (t < 1 || t > std::min(m, n))
      throw std::invalid_argument("descriptor rank bound t=" + std::to_string(t) + " outside [1, min(m,n)=" +
                                  std::to_string(std::min(m, n)) + "]");
  }

  /// Largest rank a member may have.
  int max_rank() const { return t - 1; }

  friend bool operator==(const VarietyDescriptor&, const VarietyDescriptor&) = default;
};

class StratumError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a path endpoint is not on the variety.
class MembershipError : public std::invalid_argument {
 public:
  MembershipError(const std::string& what, double residual) : std::invalid_argument(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline void check_shape(const Matrix& p, const VarietyDescriptor& d) {
  if (p.rows() != d.m || p.cols() != d.n)
    throw DimensionError("point is " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                         ", variety expects " + std::to_string(d.m) + "x" + std::to_string(d.n));
  if (p.field() != d.field) throw DimensionError("point field does not match variety field");
}

/// sigma_t / sigma_1: zero exactly on members, scale-free, 0 for the zero matrix.
inline double membership_residual(const std::vector<double>& sigma, int t) {
  if (sigma.empty() || sigma.front() == 0.0) return 0.0;
  if (static_cast<std::size_t>(t) > sigma.size()) return 0.0;
  const double top = std::max(sigma.front(), std::numeric_limits<double>::epsilon());
  return sigma[static_cast<std::size_t>(t - 1)] / top;
}

inline double membership_residual(const Matrix& p, const VarietyDescriptor& d) {
  check_shape(p, d);
  return membership_residual(singular_values(p), d.t);
}

inline constexpr double kDefaultMembershipTol = 1e-8;

inline bool is_member(const Matrix& p, const VarietyDescriptor& d, double tol = kDefaultMembershipTol) {
  return membership_residual(p, d) <= tol;
}

/// Nearest point of rank <= t-1 (truncated SVD). Members come back unchanged.
inline Matrix project(const Matrix& p, const VarietyDescriptor& d) {
  check_shape(p, d);
  const Svd s = svd(p, true);
  const auto keep = static_cast<Index>(d.t - 1);
  if (membership_residual(s.sigma, d.t) == 0.0) return p;
  DenseMatrix out = DenseMatrix::Zero(p.rows(), p.cols());
  for (Index i = 0; i < keep; ++i)
    out += s.sigma[static_cast<std::size_t>(i)] * s.U.col(i) * s.V.col(i).adjoint();
  if (p.field() == ScalarField::Real) out = out.real().cast<Scalar>();
  return Matrix(std::move(out), p.field());
}

/// Draws an m x n matrix with iid standard normal entries (complex: iid
/// real and imaginary parts).
template <class Rng>
DenseMatrix gaussian_matrix(Index rows, Index cols, ScalarField field, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix a(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = field == ScalarField::Complex ? normal(rng) : 0.0;
      a(i, j) = Scalar(re, im);
    }
  }
  return a;
}

/// Random rank-r point of Frobenius norm `radius`, drawn from rng.
template <class Rng>
Matrix sample_stratum_with(const VarietyDescriptor& d, int r, double radius, Rng& rng) {
  if (r < 0 || r >= d.t || r > std::min(d.m, d.n))
    throw StratumError("stratum rank " + std::to_string(r) + " not available in M^" + std::to_string(d.t) + "_{" +
                       std::to_string(d.m) + "," + std::to_string(d.n) + "}");
  if (r == 0) return Matrix::zeros(d.m, d.n, d.field);
  DenseMatrix g = gaussian_matrix(d.m, r, d.field, rng);
  DenseMatrix h = gaussian_matrix(r, d.n, d.field, rng);
  DenseMatrix a = g * h;
  a *= radius / a.norm();
  return Matrix(std::move(a), d.field);
}

inline Matrix sample_stratum(const VarietyDescriptor& d, int r, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_stratum_with(d, r, radius, rng);
}

/// Codimension (m-t+1)(n-t+1) of the rank < t locus.
inline long codimension(const VarietyDescriptor& d) {
  return static_cast<long>(d.m - d.t + 1) * static_cast<long>(d.n - d.t + 1);
}

}  // namespace rankpath
