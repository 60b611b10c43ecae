#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "pursuit/metrics.hpp"
#include "pursuit/optimize.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double step, int max_evals,
                             double fatol, double xatol) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fv(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += step;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  bool converged = false;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double fspread = 0.0;
    double xspread = 0.0;
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      fspread = std::max(fspread, std::abs(fv[i] - fv[best]));
      xspread = std::max(xspread, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
    }
    if (fspread <= fatol && xspread <= xatol) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < fv[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        fv[worst] = fe;
      } else {
        simplex[worst] = reflected;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = reflected;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < std::min(fr, fv[worst])) {
      simplex[worst] = contracted;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      fv[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {simplex[best], fv[best], evals, converged};
}

// Correlation matrix for one (nu, len), reusing the Bessel constants.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& dist, double nu, double len) {
  const BesselK kfun(nu);
  const double log_norm = std::lgamma(nu) + (nu - 1.0) * std::numbers::ln2;
  const double scale = std::sqrt(2.0 * nu) / len;
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd r(n, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    r(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double h = dist(i, j);
      double c = 1.0;
      if (h > 0.0) {
        const double x = scale * h;
        const double k = kfun(x);
        if (k == 0.0) {
          c = 0.0;
        } else if (k < std::numeric_limits<double>::max()) {
          c = std::min(1.0, std::exp(nu * std::log(x) + std::log(k) - log_norm));
        }
      }
      r(i, j) = c;
      r(j, i) = c;
    }
  }
  return r;
}

double median_offdiag(const Eigen::MatrixXd& dist) {
  std::vector<double> v;
  for (Eigen::Index j = 0; j < dist.cols(); ++j)
    for (Eigen::Index i = j + 1; i < dist.rows(); ++i) v.push_back(dist(i, j));
  if (v.empty()) return 1.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid > 0.0 ? *mid : 1.0;
}

}  // namespace

void MaternParams::validate() const {
  if (!std::isfinite(nu) || !std::isfinite(eta) || !std::isfinite(len) || !std::isfinite(sigma))
    throw ArgumentError("Matern parameters must be finite");
  if (!(nu > 0.0) || !(eta > 0.0) || !(len > 0.0) || sigma < 0.0)
    throw ArgumentError("Matern parameters require nu, eta, len > 0 and sigma >= 0");
}

double matern_correlation(double dist, double nu, double len) {
  if (dist <= 0.0) return 1.0;
  const double x = std::sqrt(2.0 * nu) * dist / len;
  const double k = bessel_k(nu, x);
  if (k == 0.0) return 0.0;
  if (!(k < std::numeric_limits<double>::max())) return 1.0;
  const double log_norm = std::lgamma(nu) + (nu - 1.0) * std::numbers::ln2;
  return std::min(1.0, std::exp(nu * std::log(x) + std::log(k) - log_norm));
}

double matern_cov(const Eigen::MatrixXd& u, const MaternParams& params) {
  params.validate();
  return params.eta * params.eta * matern_correlation(u.norm(), params.nu, params.len);
}

Eigen::MatrixXd basis_distances(std::span<const Basis> bases) {
  const auto n = static_cast<Eigen::Index>(bases.size());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double h = (bases[static_cast<std::size_t>(i)].matrix() -
                        bases[static_cast<std::size_t>(j)].matrix())
                           .norm();
      dist(i, j) = h;
      dist(j, i) = h;
    }
  return dist;
}

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(Eigen::MatrixXd cov, double eta2,
                                                 bool* jitter_used) {
  if (jitter_used) *jitter_used = false;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt;
  cov.diagonal().array() += 1e-8 * eta2;
  if (jitter_used) *jitter_used = true;
  llt.compute(cov);
  if (llt.info() != Eigen::Success)
    throw NonPdError("covariance matrix is not positive definite, even with jitter");
  return llt;
}

GpLikelihood gp_neg_loglik_detail(std::span<const Basis> bases, std::span<const double> y,
                                  const MaternParams& params) {
  params.validate();
  if (bases.size() != y.size() || y.empty())
    throw ArgumentError("gp_neg_loglik: need equally many bases and values (>= 1)");
  const auto n = static_cast<Eigen::Index>(y.size());
  const double eta2 = params.eta * params.eta;
  Eigen::MatrixXd cov = eta2 * correlation_matrix(basis_distances(bases), params.nu, params.len);
  cov.diagonal().array() += params.sigma * params.sigma;

  GpLikelihood out;
  const auto llt = cholesky_with_jitter(std::move(cov), eta2, &out.jitter_used);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd alpha = llt.matrixL().solve(yv);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.neg_loglik = 0.5 * alpha.squaredNorm() + 0.5 * logdet + 0.5 * static_cast<double>(n) * kLog2Pi;
  return out;
}

double gp_neg_loglik(std::span<const Basis> bases, std::span<const double> y,
                     const MaternParams& params) {
  return gp_neg_loglik_detail(bases, y, params).neg_loglik;
}

BasisSample sample_bases_smoothness(const Dataset& x, const IndexFn& index, int d, int n_basis,
                                    std::uint64_t seed) {
  if (!index.supports(d))
    throw ArgumentError("index '" + index.name + "' does not support d=" + std::to_string(d));
  if (n_basis < 1) throw ArgumentError("n_basis must be >= 1");
  const auto n = static_cast<std::size_t>(n_basis);
  std::vector<std::optional<Basis>> bases(n);
  std::vector<double> values(n);
  std::vector<int> redraws(n, 0);
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    for (int attempt = 0; attempt <= 10; ++attempt) {
      Basis a = random_basis(static_cast<int>(x.p()), d, rng);
      const double v = evaluate_index(index, x, a);
      if (std::isfinite(v)) {
        bases[i] = std::move(a);
        values[i] = v;
        break;
      }
      ++redraws[i];
    }
    if (!bases[i]) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed)
    throw DegenerateInputError("index '" + index.name +
                               "' failed on 11 consecutive random bases");
  BasisSample out;
  out.bases.reserve(n);
  for (auto& b : bases) out.bases.push_back(std::move(*b));
  out.values = std::move(values);
  out.redraws = std::accumulate(redraws.begin(), redraws.end(), 0);
  return out;
}

SmoothnessFit fit_smoothness(std::span<const Basis> bases, std::span<const double> values) {
  if (bases.size() != values.size())
    throw ArgumentError("fit_smoothness: bases and values differ in length");
  if (bases.size() < 30) throw ArgumentError("fit_smoothness needs at least 30 bases");
  const auto n = static_cast<Eigen::Index>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = values[static_cast<std::size_t>(i)] - mean;
  const double spread = y.cwiseAbs().maxCoeff();
  if (!(spread > 1e-12 * std::max(1.0, std::abs(mean))))
    throw DegenerateInputError("index has no signal over random bases (constant values)");

  const Eigen::MatrixXd dist = basis_distances(bases);
  const double dmed = median_offdiag(dist);
  const double log_len_lo = std::log(1e-2 * dmed);
  const double log_len_hi = std::log(1e2 * dmed);
  constexpr double kLogTauLo = -18.420680743952367;  // log(1e-8)
  constexpr double kLogTauHi = 4.605170185988092;    // log(100)

  struct Unpacked {
    double nu, len, tau;
  };
  auto unpack = [&](const Eigen::VectorXd& th) {
    return Unpacked{std::exp(std::clamp(th(0), std::log(kNuMin), std::log(kNuMax))),
                    std::exp(std::clamp(th(1), log_len_lo, log_len_hi)),
                    std::exp(std::clamp(th(2), kLogTauLo, kLogTauHi))};
  };
  // Profile likelihood with the output scale eta^2 = y'R^{-1}y / N.
  auto profiled = [&](const Eigen::VectorXd& th) {
    const Unpacked u = unpack(th);
    Eigen::MatrixXd r = correlation_matrix(dist, u.nu, u.len);
    r.diagonal().array() += u.tau;
    try {
      const auto llt = cholesky_with_jitter(std::move(r), 1.0);
      const double q = llt.matrixL().solve(y).squaredNorm();
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      const double nn = static_cast<double>(n);
      return 0.5 * nn * std::log(q / nn) + 0.5 * logdet + 0.5 * nn * (1.0 + kLog2Pi);
    } catch (const NonPdError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  constexpr double kStartNu[] = {0.5, 1.0, 2.0, 4.0, 8.0};
  NelderMeadResult best;
  best.f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  for (double nu0 : kStartNu) {
    Eigen::VectorXd th0(3);
    th0 << std::log(nu0), std::log(dmed), std::log(1e-2);
    NelderMeadResult res = nelder_mead(profiled, th0, 0.5, 400, 1e-6, 1e-4);
    evaluations += res.evaluations;
    if (res.f < best.f) best = std::move(res);
  }
  if (!std::isfinite(best.f))
    throw NonPdError("fit_smoothness: no starting point gave a positive definite covariance");

  const Unpacked u = unpack(best.x);
  Eigen::MatrixXd r = correlation_matrix(dist, u.nu, u.len);
  r.diagonal().array() += u.tau;
  const auto llt = cholesky_with_jitter(std::move(r), 1.0);
  const double eta2 = llt.matrixL().solve(y).squaredNorm() / static_cast<double>(n);

  SmoothnessFit fit;
  fit.params = MaternParams{u.nu, std::sqrt(eta2), u.len, std::sqrt(u.tau * eta2)};
  fit.loglik = -best.f;
  fit.n_bases = static_cast<int>(n);
  fit.converged = best.converged;
  fit.nu_at_bound = u.nu <= kNuMin * (1 + 1e-9) || u.nu >= kNuMax * (1 - 1e-9);
  fit.y_mean = mean;
  fit.evaluations = evaluations;
  return fit;
}

}  // namespace pursuit
