#pragma once

// Index diagnostics: smoothness (Matern Gaussian-process maximum
// likelihood over random bases) and squintability (index value as a
// function of projection distance to the optimum).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pursuit/data.hpp"
#include "pursuit/errors.hpp"
#include "pursuit/indexes.hpp"
#include "pursuit/manifold.hpp"

namespace pursuit {

// ---------------------------------------------------------------------------
// Modified Bessel function of the second kind

/// K_nu(x) for real order, evaluated with Temme's series for x < 2 and
/// Steed's continued fraction otherwise, followed by upward recurrence.
/// Construction precomputes the order-dependent constants, so one instance
/// can be reused across many arguments.
class BesselK {
 public:
  explicit BesselK(double nu);
  double operator()(double x) const;
  double order() const { return nu_; }

 private:
  double nu_;
  double mu_;
  int steps_;
  double gam1_, gam2_, gampl_, gammi_;
  double log_half_gamma_;  // log(Gamma(nu) / 2)
};

/// K_nu(x), x > 0. K_{-nu} = K_nu. For x so small that the result
/// overflows, returns the leading asymptotic Gamma(nu)/2 (2/x)^nu, capped at
/// the largest finite double.
double bessel_k(double nu, double x);

// ---------------------------------------------------------------------------
// Matern covariance and GP likelihood

struct MaternParams {
  double nu = 1.5;     // smoothness
  double eta = 1.0;    // outputscale
  double len = 1.0;    // lengthscale
  double sigma = 0.0;  // nugget sd

  /// Throws ArgumentError on non-finite or out-of-domain values.
  void validate() const;
};

inline constexpr double kNuMin = 0.05;
inline constexpr double kNuMax = 15.0;

/// Matern correlation (eta = 1) at Euclidean distance `dist`.
double matern_correlation(double dist, double nu, double len);

/// Matern covariance of a difference u between two bases (Frobenius norm).
double matern_cov(const Eigen::MatrixXd& u, const MaternParams& params);

/// Pairwise ||A_i - A_j||_F of the raw matrices.
Eigen::MatrixXd basis_distances(std::span<const Basis> bases);

struct GpLikelihood {
  double neg_loglik = 0.0;
  bool jitter_used = false;
};

/// Cholesky of `cov`, retrying once with 1e-8 * eta2 added to the
/// diagonal. Throws NonPdError if both attempts fail.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(Eigen::MatrixXd cov, double eta2,
                                                 bool* jitter_used = nullptr);

/// -log p(y | bases, params) for a zero-mean GP with Matern covariance
/// plus nugget.
GpLikelihood gp_neg_loglik_detail(std::span<const Basis> bases, std::span<const double> y,
                                  const MaternParams& params);
double gp_neg_loglik(std::span<const Basis> bases, std::span<const double> y,
                     const MaternParams& params);

struct BasisSample {
  std::vector<Basis> bases;
  std::vector<double> values;
  int redraws = 0;
};

/// n_basis uniform bases with their index values. Each basis uses its own
/// derived random stream so the result does not depend on threading.
BasisSample sample_bases_smoothness(const Dataset& x, const IndexFn& index, int d,
                                    int n_basis = 500, std::uint64_t seed = 0);

struct SmoothnessFit {
  MaternParams params;
  double loglik = 0.0;
  int n_bases = 0;
  bool converged = false;
  bool nu_at_bound = false;
  double y_mean = 0.0;  // constant mean removed before fitting
  int evaluations = 0;
};

/// Maximum-likelihood Matern fit by Nelder-Mead in log-parameter space from
/// five deterministic starts. The output scale is profiled out analytically.
SmoothnessFit fit_smoothness(std::span<const Basis> bases, std::span<const double> values);

// ---------------------------------------------------------------------------
// Squintability

struct DistanceValue {
  double distance = 0.0;
  double value = 0.0;
  int path = 0;
};

struct SquintSampling {
  int n_basis = 50;
  double step = 0.005;
  double min_proj_dist = 0.5;
  std::uint64_t seed = 0;
};

/// Interpolates random starts (at least min_proj_dist away) to `optimum`
/// and records (distance to optimum, index value) along each geodesic.
std::vector<DistanceValue> sample_bases_squint(const Dataset& x, const IndexFn& index, int d,
                                               const Basis& optimum,
                                               const SquintSampling& options = {});

struct SquintSamples {
  std::vector<double> centers;
  std::vector<double> means;
  std::vector<int> counts;
  double bin_width = 0.005;
  double r0 = 0.0;  // largest occupied bin center
};

SquintSamples bin_average(std::span<const DistanceValue> raw, double bin_width = 0.005);

struct SigmoidParams {
  double theta1 = 1.0;
  double theta2 = 0.5;
  double theta3 = 1.0;
  double theta4 = 0.0;
  double r0 = 1.0;
  double sse = 0.0;
  int iterations = 0;
};

/// Decreasing logistic 1 / (1 + exp(theta3 (x - theta2))).
double logistic_decay(double x, double theta2, double theta3);

/// (l(x) - l(r0)) / (l(0) - l(r0)), computed without cancellation so the
/// theta3 -> 0 limit (r0 - x) / r0 is reached smoothly.
double logistic_fraction(double x, double theta2, double theta3, double r0);

/// Scaled sigmoid g(x) with g(0) = theta1, g(r0) = theta4.
double scaled_sigmoid(double x, const SigmoidParams& p);

class SigmoidFitError : public ConvergenceError {
 public:
  SigmoidFitError(const std::string& what, SigmoidParams best)
      : ConvergenceError(what), best_(best) {}
  const SigmoidParams& best() const { return best_; }

 private:
  SigmoidParams best_;
};

/// Levenberg-Marquardt fit of scaled_sigmoid to the binned means, with r0
/// fixed at samples.r0 and all bins weighted equally.
SigmoidParams fit_sigmoid_nls(const SquintSamples& samples);

enum class SquintMethod { parametric, kernel };
const char* squint_method_name(SquintMethod m);

struct SquintResult {
  double varsigma = 0.0;
  SquintMethod method = SquintMethod::parametric;
  std::optional<SigmoidParams> sigmoid;
  double max_gradient = 0.0;  // kernel method
  double max_dist = 0.0;      // kernel method
  double bandwidth = 0.0;     // kernel method
};

/// (l(r0/2) - l(r0)) / (l(0) - l(r0)), clamped to [0, 1].
SquintResult squintability_parametric(const SigmoidParams& params);

/// Nadaraya-Watson smooth of the binned means; varsigma is the steepest
/// absolute slope times the distance where it occurs.
SquintResult squintability_kernel(const SquintSamples& samples);

struct SquintReport {
  SquintSamples samples;
  SquintResult result;
  std::size_t raw_points = 0;
};

/// Sampling, binning and fitting in one call.
SquintReport squintability(const Dataset& x, const IndexFn& index, int d, const Basis& optimum,
                           SquintMethod method, const SquintSampling& sampling = {},
                           double bin_width = 0.005);

}  // namespace pursuit
