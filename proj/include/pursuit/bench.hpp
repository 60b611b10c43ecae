#pragma once

// Experiment orchestration: repeated optimizations, success rates,
// bootstrap intervals, quasibinomial GLM and Huber curves.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pursuit/data.hpp"
#include "pursuit/indexes.hpp"
#include "pursuit/manifold.hpp"
#include "pursuit/optimize.hpp"

namespace pursuit {

/// Generates one of the named synthetic shapes. pipe and sine honor p;
/// trimodal is always 2-D and randu 3-D.
Dataset simulate_shape(const std::string& shape, int n, int p, std::uint64_t seed);

/// The plane holding the generated structure (span of e1, e2) for pipe and
/// sine data in p dimensions.
Basis structure_plane(int p);

struct ExperimentDesign {
  std::string shape = "pipe";
  int n = 1000;
  int p = 6;
  int d = 2;
  std::string index = "holes";
  std::string optimizer = "jso";  // "jso" | "crs"
  JsoConfig jso;
  CrsConfig crs;
  int n_reps = 50;
  double success_tol = 0.05;
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0: OpenMP default
  int n_boot = 500;

  void validate() const;
};

struct RepResult {
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double best_value = 0.0;
  std::optional<Basis> best_basis;
  int iterations = 0;
  int evaluations = 0;
  double wall_time = 0.0;
};

struct RunSummary {
  ExperimentDesign design;
  std::string data_provenance;
  std::vector<RepResult> reps;
  double success_rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int failed_reps = 0;
  double wall_time = 0.0;
};

/// Fraction of entries within `tol` of the largest. NaN entries are
/// failures: they count in the denominator only.
double success_rate(std::span<const double> best_values, double tol = 0.05);

/// 2.5% / 97.5% percentiles of success_rate over bootstrap resamples.
std::pair<double, double> bootstrap_ci(std::span<const double> best_values, double tol,
                                       int n_boot = 500, std::uint64_t seed = 0);

/// Runs the design on its generated dataset.
RunSummary run_experiment(const ExperimentDesign& design);

/// Runs the design on a caller-supplied dataset (shape/n/p are ignored).
RunSummary run_experiment(const ExperimentDesign& design, const Dataset& data);

// ---------------------------------------------------------------------------

struct GlmRow {
  double successes = 0.0;
  double trials = 0.0;
  std::vector<double> predictors;
};

struct GlmTerm {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double odds_ratio = 1.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
};

struct GlmFit {
  std::vector<GlmTerm> terms;  // intercept first
  double dispersion = 1.0;
  double deviance = 0.0;
  double null_deviance = 0.0;
  int df_residual = 0;
  int df_null = 0;
  int iterations = 0;
  bool separation_warning = false;
};

/// Logistic regression on (successes, trials) rows by IRLS, with
/// Pearson-dispersion-scaled standard errors and t-based p-values.
/// `names` labels the predictor columns; an intercept is always included.
GlmFit fit_quasibinomial_glm(std::span<const GlmRow> rows, const std::vector<std::string>& names);

/// Average ranks (ties share the mean rank), 1 = smallest.
std::vector<double> ranks(std::span<const double> values);

// ---------------------------------------------------------------------------

struct HuberCurve {
  std::vector<double> angles;
  std::vector<double> values;
  double mean = 0.0;
  double argmax_angle = 0.0;
};

/// Index values of the 1-D projections onto (cos a, sin a), a = 2 pi k / n.
HuberCurve huber_curve(const Dataset& x2, const IndexFn& index, int n_angles = 360);

}  // namespace pursuit
