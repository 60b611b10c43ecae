#pragma once

// Orthonormal projection bases and plane geometry on the Grassmannian.

#include <Eigen/Dense>

#include "pursuit/rng.hpp"

namespace pursuit {

/// p x d matrix with orthonormal columns (1 <= d < p). Only constructible
/// through orthonormalize(), random_basis() or from_orthonormal(), so every
/// live instance satisfies A'A = I_d.
class Basis {
 public:
  /// Wraps `m` after checking A'A = I within `tol`; throws ArgumentError.
  static Basis from_orthonormal(Eigen::MatrixXd m, double tol = 1e-10);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index p() const { return m_.rows(); }
  Eigen::Index d() const { return m_.cols(); }

  /// Max |A'A - I| elementwise.
  double orthonormality_error() const;

 private:
  explicit Basis(Eigen::MatrixXd m) : m_(std::move(m)) {}
  friend Basis orthonormalize(const Eigen::MatrixXd&);
  Eigen::MatrixXd m_;
};

/// Planes closer than this in projection distance are treated as equal.
inline constexpr double kSamePlaneTol = 1e-8;

/// Modified Gram-Schmidt with one reorthogonalization pass.
/// Throws DegenerateInputError when a column norm falls below 1e-12.
Basis orthonormalize(const Eigen::MatrixXd& m);

/// Uniform draw from the Stiefel manifold V_d(R^p).
Basis random_basis(int p, int d, Rng& rng);

/// ||AA' - BB'||_F, in [0, sqrt(2d)].
double proj_distance(const Basis& a, const Basis& b);

/// Smallest principal angle between the two planes, in [0, pi/2].
double squint_angle(const Basis& a, const Basis& b);

/// Cosines of the principal angles (singular values of A'B), descending.
Eigen::VectorXd principal_cosines(const Basis& a, const Basis& b);

/// Point at fraction t of the plane-to-plane geodesic from plane(A) to
/// plane(B). At t = 0 the frame equals A exactly.
Basis geodesic_interpolate(const Basis& a, const Basis& b, double t);

/// Rotation/reflection of B within its own plane closest to `ref` in
/// Frobenius norm (orthogonal Procrustes).
Basis orient_align(const Basis& b, const Basis& ref);

}  // namespace pursuit
