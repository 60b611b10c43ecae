#pragma once

// Projection pursuit index functions f(XA) and their registry.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pursuit {

using ProjectedRef = Eigen::Ref<const Eigen::MatrixXd>;

/// A named, pure map from projected data Y (n x d) to a scalar.
struct IndexFn {
  std::string name;
  /// Projection dimensions this index accepts; empty means any d >= 1.
  std::vector<int> supported_d;
  bool rotation_invariant = false;
  std::function<double(ProjectedRef)> eval;

  bool supports(int d) const;
  /// Natural target dimension: the smallest supported d, or 2 when any.
  int default_d() const;
  double operator()(ProjectedRef y) const { return eval(y); }
};

/// (1 - mean exp(-|y|^2/2)) / (1 - exp(-d/2)).
double holes(ProjectedRef y);

/// (mean exp(-|y|^2/2) - exp(-d/2)) / (1 - exp(-d/2)).
double cmass(ProjectedRef y);

/// Sample skewness m3 / m2^{3/2} of a single column.
double skewness1d(ProjectedRef y);

/// Bin count used by norm_bin: ceil(2 n^{2/5}) capped at 20, at least 2.
int norm_bin_count(Eigen::Index n);

/// Pearson chi-square of observed counts against a common expected count.
double chi_square_counts(std::span<const double> counts, double expected);

/// Chi-square discrepancy of the standardized column against equal
/// probability standard-normal bins.
double norm_bin(ProjectedRef y);
double norm_bin(ProjectedRef y, int bins);

/// Squared distance correlation between the two columns (V-statistic).
double dcor2d(ProjectedRef y);

/// Penalized cubic B-spline regression of one column on the other, with
/// the smoothing parameter chosen by GCV. Returns the coefficient of
/// determination, max over both directions.
double splines2d(ProjectedRef y);

/// One-directional helper behind splines2d: R^2 of response ~ s(regressor).
double spline_r2(std::span<const double> regressor, std::span<const double> response);

/// MST diameter path length over total MST length.
double stringy(ProjectedRef y);

/// Case-insensitive lookup. Throws ArgumentError listing the available
/// names for unknown or out-of-scope indexes.
IndexFn registry_lookup(const std::string& name);

/// Canonical names in registry order.
std::vector<std::string> registry_names();

}  // namespace pursuit
