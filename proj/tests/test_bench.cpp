#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pursuit/bench.hpp"
#include "pursuit/errors.hpp"
#include "pursuit/rng.hpp"

using namespace pursuit;

namespace {

// Plain binomial logistic regression by Newton's method on the log-likelihood.
Eigen::VectorXd newton_logit(const std::vector<GlmRow>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(rows[0].predictors.size() + 1);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) x(i, j) = rows[i].predictors[j - 1];
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
      grad += (rows[i].successes - rows[i].trials * p) * x.row(i).transpose();
      hess += rows[i].trials * p * (1 - p) * x.row(i).transpose() * x.row(i);
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta += step;
    if (step.norm() < 1e-14) break;
  }
  return beta;
}

double width(std::pair<double, double> ci) { return ci.second - ci.first; }

}  // namespace

TEST_CASE("success rate arithmetic") {
  std::vector<double> v(50, 0.0);
  for (int i = 0; i < 43; ++i) v[i] = 0.99;
  CHECK(success_rate(v) == 0.86);
  CHECK(success_rate(std::vector<double>{1.0, 0.96, 0.94, 0.80}, 0.05) == 0.5);
  CHECK(success_rate(std::vector<double>(7, 0.3)) == 1.0);
  CHECK(success_rate(std::vector<double>{0.4}) == 1.0);
  CHECK(success_rate(std::vector<double>{1.0, 0.2, 0.6}, 0.8) == 1.0);
  // A failed rep counts against the rate.
  CHECK(success_rate(std::vector<double>{1.0, std::nan(""), 0.99, 0.5}) == 0.5);
  CHECK_THROWS_AS(success_rate(std::vector<double>{}), ArgumentError);
}

TEST_CASE("bootstrap CI") {
  CHECK(bootstrap_ci(std::vector<double>(20, 1.0), 0.05, 500, 1) == std::pair{1.0, 1.0});
  Rng rng(4);
  std::vector<double> v(40);
  for (double& x : v) x = uniform01(rng) < 0.7 ? 1.0 : 0.5;
  CHECK(bootstrap_ci(v, 0.05, 500, 9) == bootstrap_ci(v, 0.05, 500, 9));

  int brackets = 0;
  int shrinks = 0;
  for (int t = 0; t < 100; ++t) {
    Rng r(derive_seed(8, t));
    auto draw = [&](int n) {
      std::vector<double> out(static_cast<std::size_t>(n));
      for (double& x : out) x = uniform01(r) < 0.6 ? 1.0 - 0.01 * uniform01(r) : 0.5 * uniform01(r);
      return out;
    };
    const auto small = draw(20);
    const auto large = draw(200);
    const auto ci = bootstrap_ci(small, 0.05, 500, t);
    const double est = success_rate(small, 0.05);
    brackets += ci.first <= est && est <= ci.second;
    shrinks += width(bootstrap_ci(large, 0.05, 500, t)) < width(ci);
  }
  CHECK(brackets >= 99);
  CHECK(shrinks >= 90);
}

TEST_CASE("ranks average ties") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  CHECK(ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("GLM: saturated two-group fit") {
  const std::vector<GlmRow> rows{{50, 100, {0.0}}, {80, 100, {1.0}}};
  const GlmFit fit = fit_quasibinomial_glm(rows, {"x"});
  REQUIRE(fit.terms.size() == 2u);
  CHECK(fit.terms[0].name == "(Intercept)");
  CHECK(std::abs(fit.terms[0].coef) < 1e-9);
  CHECK(std::abs(fit.terms[1].coef - std::log(4.0)) < 1e-9);
  CHECK(fit.terms[1].odds_ratio == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(fit.deviance < 1e-9);
}

TEST_CASE("GLM: intercept-only model is the pooled logit") {
  const std::vector<GlmRow> rows{{3, 10, {}}, {7, 20, {}}, {12, 25, {}}};
  const GlmFit fit = fit_quasibinomial_glm(rows, {});
  const double p = 22.0 / 55.0;
  CHECK(std::abs(fit.terms[0].coef - std::log(p / (1 - p))) < 1e-10);
  CHECK(fit.df_residual == 2);
}

TEST_CASE("GLM: matches a Newton oracle and reports consistent statistics") {
  Rng rng(12);
  std::vector<GlmRow> rows;
  for (int i = 0; i < 40; ++i) {
    const double a = standard_normal(rng);
    const double b = uniform01(rng) * 3;
    const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * a - 0.5 * b)));
    int s = 0;
    for (int k = 0; k < 25; ++k) s += uniform01(rng) < p;
    rows.push_back({static_cast<double>(s), 25.0, {a, b}});
  }
  const GlmFit fit = fit_quasibinomial_glm(rows, {"a", "b"});
  const Eigen::VectorXd oracle = newton_logit(rows);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(fit.terms[j].coef - oracle(j)) < 1e-8);
    CHECK(std::abs(fit.terms[j].odds_ratio - std::exp(fit.terms[j].coef)) <= 1e-12 * fit.terms[j].odds_ratio);
    CHECK(fit.terms[j].ci_lo == doctest::Approx(std::exp(fit.terms[j].coef - 1.96 * fit.terms[j].se)));
    CHECK(fit.terms[j].ci_hi == doctest::Approx(std::exp(fit.terms[j].coef + 1.96 * fit.terms[j].se)));
    CHECK(fit.terms[j].p_value >= 0.0);
    CHECK(fit.terms[j].p_value <= 1.0);
  }
  CHECK(fit.terms[1].coef > 0);
  CHECK(fit.terms[1].p_value < 0.05);
  CHECK(fit.terms[2].coef < 0);
  CHECK(fit.df_residual == 37);
  CHECK(fit.df_null == 39);
  CHECK(fit.deviance < fit.null_deviance);
  CHECK(fit.dispersion > 0.0);
  CHECK_FALSE(fit.separation_warning);
}

TEST_CASE("GLM: dispersion scales standard errors only") {
  const std::vector<GlmRow> base{{2, 20, {0}}, {9, 20, {1}}, {5, 20, {2}}, {17, 20, {3}}, {12, 20, {4}}};
  const GlmFit fit = fit_quasibinomial_glm(base, {"x"});
  // Same proportions from twice the trials: same coefficients.
  std::vector<GlmRow> doubled = base;
  for (auto& r : doubled) r.successes *= 2, r.trials *= 2;
  const GlmFit fit2 = fit_quasibinomial_glm(doubled, {"x"});
  CHECK(std::abs(fit.terms[1].coef - fit2.terms[1].coef) < 1e-9);
  CHECK(fit.dispersion > 1.0);  // overdispersed by construction
}

TEST_CASE("GLM: separation and bad input") {
  const std::vector<GlmRow> sep{{0, 10, {0}}, {0, 10, {1}}, {10, 10, {2}}, {10, 10, {3}}};
  CHECK(fit_quasibinomial_glm(sep, {"x"}).separation_warning);
  CHECK_THROWS_AS(fit_quasibinomial_glm(std::vector<GlmRow>{}, {}), ArgumentError);
  // A constant predictor is aliased with the intercept.
  const std::vector<GlmRow> flat{{2, 10, {3.0}}, {5, 10, {3.0}}, {7, 10, {3.0}}};
  CHECK_THROWS_AS(fit_quasibinomial_glm(flat, {"x"}), DegenerateInputError);
  const std::vector<GlmRow> twin{{2, 10, {1, 2}}, {5, 10, {2, 4}}, {7, 10, {3, 6}}, {9, 10, {4, 8}}};
  CHECK_THROWS_AS(fit_quasibinomial_glm(twin, {"a", "b"}), DegenerateInputError);
  CHECK_THROWS_AS(fit_quasibinomial_glm(std::vector<GlmRow>{{3, 2, {}}, {1, 2, {}}}, {}), ArgumentError);
}

TEST_CASE("run_experiment") {
  ExperimentDesign d;
  d.shape = "pipe";
  d.n = 200;
  d.p = 4;
  d.jso = JsoConfig{10, 10};
  d.n_reps = 1;
  d.master_seed = 3;
  CHECK(run_experiment(d).success_rate == 1.0);

  d.n_reps = 6;
  const RunSummary a = run_experiment(d);
  const RunSummary b = run_experiment(d);
  REQUIRE(a.reps.size() == 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.reps[i].seed == derive_seed(3, i));
    CHECK(a.reps[i].best_value == b.reps[i].best_value);
    CHECK(a.reps[i].best_basis->matrix() == b.reps[i].best_basis->matrix());
  }
  CHECK(a.success_rate == b.success_rate);
  CHECK(a.ci_lo == b.ci_lo);

  d.optimizer = "crs";
  d.crs = CrsConfig{50, 0.5, 100};
  CHECK(run_experiment(d).reps.size() == 6u);

  d.n_reps = 0;
  CHECK_THROWS_AS(run_experiment(d), ArgumentError);
}

TEST_CASE("run_experiment records failed reps") {
  ExperimentDesign d;
  d.index = "skewness";  // needs d = 1
  d.d = 2;
  d.n = 50;
  d.n_reps = 3;
  d.jso = JsoConfig{4, 3};
  const RunSummary s = run_experiment(d, gen_pipe(50, 4, 1));
  CHECK(s.failed_reps == 3);
  CHECK(s.success_rate == 0.0);
  CHECK_FALSE(s.reps[0].error.empty());
}

TEST_CASE("huber curve") {
  const Dataset tri = gen_trimodal(900, 4);
  const IndexFn skew = registry_lookup("skewness");
  const HuberCurve c = huber_curve(tri, skew, 360);
  CHECK(c.angles.size() == 360u);
  // |skewness| is sign invariant, so the curve has period pi.
  for (int k = 0; k < 180; ++k) CHECK(std::abs(c.values[k] - c.values[k + 180]) < 1e-9);

  const HuberCurve fine = huber_curve(tri, skew, 3600);
  const double diff = std::remainder(c.argmax_angle - fine.argmax_angle, M_PI);
  CHECK(std::abs(diff) <= 5.0 * M_PI / 180.0);

  Rng rng(5);
  const Dataset iso = make_dataset(normal_matrix(5000, 2, rng), "iso");
  const HuberCurve h = huber_curve(iso, registry_lookup("holes"), 360);
  const auto [lo, hi] = std::minmax_element(h.values.begin(), h.values.end());
  CHECK(*hi - *lo < 0.1);
  CHECK(h.mean >= *lo);
  CHECK(h.mean <= *hi);

  CHECK_THROWS_AS(huber_curve(gen_pipe(50, 3, 1), skew), ArgumentError);
  CHECK_THROWS_AS(huber_curve(tri, registry_lookup("dcor")), ArgumentError);
}
