#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "pursuit/bench.hpp"
#include "pursuit/errors.hpp"

namespace pursuit {

namespace {

double xlogy_ratio(double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; }

double binomial_deviance(std::span<const GlmRow> rows, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = rows[i].trials;
    const double s = rows[i].successes;
    const double m = mu(static_cast<Eigen::Index>(i));
    dev += 2.0 * (xlogy_ratio(s, t * m) + xlogy_ratio(t - s, t * (1.0 - m)));
  }
  return dev;
}

Eigen::VectorXd logistic(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double e) {
    const double m = 1.0 / (1.0 + std::exp(-e));
    return std::clamp(m, 1e-15, 1.0 - 1e-15);
  });
}

}  // namespace

std::vector<double> ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = r;
    i = j + 1;
  }
  return out;
}

GlmFit fit_quasibinomial_glm(std::span<const GlmRow> rows, const std::vector<std::string>& names) {
  if (rows.size() < 2) throw ArgumentError("GLM needs at least 2 rows");
  const std::size_t k = names.size();
  for (const auto& r : rows) {
    if (r.predictors.size() != k)
      throw ArgumentError("GLM row has " + std::to_string(r.predictors.size()) +
                          " predictors, expected " + std::to_string(k));
    if (!(r.trials > 0.0) || r.successes < 0.0 || r.successes > r.trials)
      throw ArgumentError("GLM rows need 0 <= successes <= trials, trials > 0");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto cols = static_cast<Eigen::Index>(k + 1);
  if (n < cols) throw ArgumentError("GLM has more coefficients than rows");

  Eigen::MatrixXd x(n, cols);
  Eigen::VectorXd y(n);
  Eigen::VectorXd trials(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GlmRow& r = rows[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) x(i, static_cast<Eigen::Index>(j + 1)) = r.predictors[j];
    trials(i) = r.trials;
    y(i) = r.successes / r.trials;
  }

  {
    // Scale columns first so the rank test does not depend on units.
    Eigen::MatrixXd scaled = x;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double norm = scaled.col(j).norm();
      if (norm > 0.0) scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols)
      throw DegenerateInputError("GLM predictors are collinear with each other or the intercept");
  }

  // Start from the empirical logits, shrunk away from 0 and 1.
  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i)
    mu(i) = (y(i) * trials(i) + 0.5) / (trials(i) + 1.0);
  Eigen::VectorXd eta = (mu.array() / (1.0 - mu.array())).log().matrix();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
  double dev = binomial_deviance(rows, mu);

  GlmFit fit;
  bool converged = false;
  for (int it = 1; it <= 100; ++it) {
    const Eigen::ArrayXd var = mu.array() * (1.0 - mu.array());
    const Eigen::VectorXd w = (trials.array() * var).matrix();
    const Eigen::VectorXd z = eta + ((y - mu).array() / var).matrix();
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    beta = (xtw * x).ldlt().solve(xtw * z);
    eta = x * beta;
    mu = logistic(eta);
    const double dev_new = binomial_deviance(rows, mu);
    fit.iterations = it;
    if (std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1) < 1e-10) {
      dev = dev_new;
      converged = true;
      break;
    }
    dev = dev_new;
  }
  if (!converged) throw ConvergenceError("GLM IRLS did not converge in 100 iterations");

  const Eigen::ArrayXd var = mu.array() * (1.0 - mu.array());
  const Eigen::VectorXd w = (trials.array() * var).matrix();
  const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));

  fit.df_residual = static_cast<int>(n - cols);
  fit.df_null = static_cast<int>(n - 1);
  double pearson = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double resid = trials(i) * (y(i) - mu(i));
    pearson += resid * resid / (trials(i) * var(i));
  }
  fit.dispersion = fit.df_residual > 0 ? pearson / fit.df_residual
                                       : std::numeric_limits<double>::quiet_NaN();
  fit.deviance = dev;

  const double pooled = y.dot(trials) / trials.sum();
  fit.null_deviance = binomial_deviance(rows, Eigen::VectorXd::Constant(n, pooled));

  for (Eigen::Index j = 0; j < cols; ++j) {
    GlmTerm term;
    term.name = j == 0 ? "(Intercept)" : names[static_cast<std::size_t>(j - 1)];
    term.coef = beta(j);
    term.se = std::sqrt(fit.dispersion * cov(j, j));
    term.odds_ratio = std::exp(term.coef);
    term.ci_lo = std::exp(term.coef - 1.96 * term.se);
    term.ci_hi = std::exp(term.coef + 1.96 * term.se);
    term.t_value = term.coef / term.se;
    if (fit.df_residual > 0 && std::isfinite(term.t_value)) {
      const boost::math::students_t dist(fit.df_residual);
      term.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(term.t_value)));
    } else {
      term.p_value = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::abs(term.coef) > 20.0) fit.separation_warning = true;
    fit.terms.push_back(term);
  }
  return fit;
}

}  // namespace pursuit
