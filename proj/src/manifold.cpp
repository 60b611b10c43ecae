#include "pursuit/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pursuit/errors.hpp"

namespace pursuit {

namespace {

void require_same_shape(const Basis& a, const Basis& b, const char* what) {
  if (a.p() != b.p() || a.d() != b.d())
    throw ArgumentError(std::string(what) + ": shape mismatch (" + std::to_string(a.p()) + "x" +
                        std::to_string(a.d()) + " vs " + std::to_string(b.p()) + "x" +
                        std::to_string(b.d()) + ")");
}

}  // namespace

Basis Basis::from_orthonormal(Eigen::MatrixXd m, double tol) {
  if (m.cols() < 1 || m.cols() >= m.rows())
    throw ArgumentError("basis requires 1 <= d < p, got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  if (!m.allFinite()) throw ArgumentError("basis has non-finite entries");
  const Eigen::MatrixXd gram = m.transpose() * m;
  const double err =
      (gram - Eigen::MatrixXd::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
  if (err > tol)
    throw ArgumentError("matrix is not orthonormal (max |A'A - I| = " + std::to_string(err) + ")");
  return Basis(std::move(m));
}

double Basis::orthonormality_error() const {
  const Eigen::MatrixXd gram = m_.transpose() * m_;
  return (gram - Eigen::MatrixXd::Identity(d(), d())).cwiseAbs().maxCoeff();
}

Basis orthonormalize(const Eigen::MatrixXd& m) {
  const Eigen::Index p = m.rows();
  const Eigen::Index d = m.cols();
  if (d < 1 || d >= p)
    throw ArgumentError("orthonormalize requires 1 <= d < p, got " + std::to_string(p) + "x" +
                        std::to_string(d));
  if (!m.allFinite()) throw DegenerateInputError("orthonormalize: non-finite input");

  Eigen::MatrixXd q = m;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    }
    const double norm = q.col(j).norm();
    if (norm < 1e-12)
      throw DegenerateInputError("orthonormalize: column " + std::to_string(j + 1) +
                                 " is linearly dependent on the previous columns");
    q.col(j) /= norm;
  }
  return Basis(std::move(q));
}

Basis random_basis(int p, int d, Rng& rng) {
  if (d < 1 || d >= p)
    throw ArgumentError("random_basis requires 1 <= d < p, got p=" + std::to_string(p) +
                        " d=" + std::to_string(d));
  return orthonormalize(normal_matrix(p, d, rng));
}

double proj_distance(const Basis& a, const Basis& b) {
  require_same_shape(a, b, "proj_distance");
  const Eigen::MatrixXd diff =
      a.matrix() * a.matrix().transpose() - b.matrix() * b.matrix().transpose();
  return diff.norm();
}

Eigen::VectorXd principal_cosines(const Basis& a, const Basis& b) {
  require_same_shape(a, b, "principal_cosines");
  const Eigen::MatrixXd m = a.matrix().transpose() * b.matrix();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().cwiseMin(1.0);
}

double squint_angle(const Basis& a, const Basis& b) {
  const Eigen::VectorXd tau = principal_cosines(a, b);
  const double cmax = tau.maxCoeff();
  if (cmax < M_SQRT1_2) return std::acos(std::clamp(cmax, 0.0, 1.0));
  // acos is ill-conditioned near 1: recover the smallest sine from the
  // component of B orthogonal to plane(A).
  const Eigen::MatrixXd resid =
      b.matrix() - a.matrix() * (a.matrix().transpose() * b.matrix());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
  const double smin = svd.singularValues().minCoeff();
  return std::asin(std::clamp(smin, 0.0, 1.0));
}

Basis orient_align(const Basis& b, const Basis& ref) {
  require_same_shape(b, ref, "orient_align");
  const Eigen::MatrixXd m = b.matrix().transpose() * ref.matrix();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
  return orthonormalize(b.matrix() * rot);
}

Basis geodesic_interpolate(const Basis& a, const Basis& b, double t) {
  require_same_shape(a, b, "geodesic_interpolate");
  if (!(t >= 0.0 && t <= 1.0))
    throw ArgumentError("geodesic_interpolate: t must lie in [0, 1], got " + std::to_string(t));
  if (proj_distance(a, b) < kSamePlaneTol) return orient_align(b, a);
  if (t == 0.0) return a;

  const Eigen::MatrixXd m = a.matrix().transpose() * b.matrix();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd& va = svd.matrixU();
  const Eigen::MatrixXd& vz = svd.matrixV();
  const Eigen::MatrixXd ga = a.matrix() * va;
  Eigen::MatrixXd gz = b.matrix() * vz;
  const Eigen::Index d = a.d();

  Eigen::VectorXd angle(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    // Direction of travel for the i-th principal pair, orthogonal to ga.
    const double cosine = ga.col(i).dot(gz.col(i));
    gz.col(i) -= cosine * ga.col(i);
    const double norm = gz.col(i).norm();
    angle(i) = std::atan2(norm, cosine);
    if (norm > 1e-12) {
      gz.col(i) /= norm;
    } else {
      gz.col(i).setZero();
      angle(i) = 0.0;
    }
  }

  Eigen::MatrixXd gt(a.p(), d);
  for (Eigen::Index i = 0; i < d; ++i)
    gt.col(i) = std::cos(t * angle(i)) * ga.col(i) + std::sin(t * angle(i)) * gz.col(i);
  return orthonormalize(gt * va.transpose());
}

}  // namespace pursuit
