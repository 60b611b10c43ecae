#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include "pursuit/metrics.hpp"
#include "pursuit/optimize.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

namespace {

// log(sinh(a)) for a > 0.
double log_sinh(double a) {
  return a > 20.0 ? a - std::numbers::ln2 : std::log(std::sinh(a));
}

// log(cosh(b)).
double log_cosh(double b) {
  const double ab = std::abs(b);
  return ab + std::log1p(std::exp(-2.0 * ab)) - std::numbers::ln2;
}

constexpr int kTheta1 = 0;
constexpr int kTheta2 = 1;
constexpr int kLogTheta3 = 2;
constexpr int kTheta4 = 3;

SigmoidParams unpack(const Eigen::Vector4d& v, double r0) {
  SigmoidParams p;
  p.theta1 = v(kTheta1);
  p.theta2 = v(kTheta2);
  p.theta3 = std::exp(v(kLogTheta3));
  p.theta4 = v(kTheta4);
  p.r0 = r0;
  return p;
}

Eigen::VectorXd residuals(const SquintSamples& s, const SigmoidParams& p) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(s.centers.size()));
  for (std::size_t i = 0; i < s.centers.size(); ++i)
    r(static_cast<Eigen::Index>(i)) = scaled_sigmoid(s.centers[i], p) - s.means[i];
  return r;
}

}  // namespace

std::vector<DistanceValue> sample_bases_squint(const Dataset& x, const IndexFn& index, int d,
                                               const Basis& optimum,
                                               const SquintSampling& options) {
  if (!index.supports(d))
    throw ArgumentError("index '" + index.name + "' does not support d=" + std::to_string(d));
  if (optimum.d() != d || optimum.p() != x.p())
    throw ArgumentError("optimal basis shape does not match data and d");
  if (options.n_basis < 1) throw ArgumentError("n_basis must be >= 1");
  if (!(options.step > 0.0)) throw ArgumentError("step must be > 0");
  const double max_dist = std::sqrt(2.0 * d);
  if (options.min_proj_dist > max_dist)
    throw ArgumentError("min_proj_dist exceeds the largest possible projection distance");

  const auto n = static_cast<std::size_t>(options.n_basis);
  std::vector<std::vector<DistanceValue>> paths(n);
  bool no_start = false;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(options.seed, i));
    std::optional<Basis> start;
    for (int attempt = 0; attempt < 1000 && !start; ++attempt) {
      Basis a = random_basis(static_cast<int>(x.p()), d, rng);
      // Aligning the frame makes the geodesic end on the optimum's own frame,
      // which matters for indexes that are not rotation invariant.
      if (proj_distance(a, optimum) >= options.min_proj_dist) start = orient_align(a, optimum);
    }
    if (!start) {
#pragma omp atomic write
      no_start = true;
      continue;
    }
    const Eigen::VectorXd cosines = principal_cosines(*start, optimum);
    double arc2 = 0.0;
    for (Eigen::Index k = 0; k < cosines.size(); ++k) {
      const double angle = std::acos(std::clamp(cosines(k), 0.0, 1.0));
      arc2 += angle * angle;
    }
    // sqrt(2) * |angles| bounds the speed of the projection distance.
    const int steps = std::max(1, static_cast<int>(std::ceil(std::sqrt(2.0 * arc2) / options.step)));
    auto& path = paths[i];
    path.reserve(static_cast<std::size_t>(steps + 1));
    for (int k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) / steps;
      const Basis b = geodesic_interpolate(*start, optimum, t);
      const double v = evaluate_index(index, x, b);
      if (std::isfinite(v)) path.push_back({proj_distance(b, optimum), v, static_cast<int>(i)});
    }
  }
  if (no_start)
    throw DegenerateInputError("could not draw a start basis at least min_proj_dist from the "
                               "optimum in 1000 attempts");
  std::vector<DistanceValue> out;
  for (auto& path : paths) out.insert(out.end(), path.begin(), path.end());
  return out;
}

SquintSamples bin_average(std::span<const DistanceValue> raw, double bin_width) {
  if (raw.empty()) throw ArgumentError("bin_average needs at least one pair");
  if (!(bin_width > 0.0)) throw ArgumentError("bin_width must be > 0");
  std::map<long, std::pair<double, int>> bins;
  for (const auto& dv : raw) {
    const long k = static_cast<long>(std::floor(dv.distance / bin_width));
    auto& [sum, count] = bins[k];
    sum += dv.value;
    ++count;
  }
  SquintSamples s;
  s.bin_width = bin_width;
  for (const auto& [k, acc] : bins) {
    s.centers.push_back((static_cast<double>(k) + 0.5) * bin_width);
    s.means.push_back(acc.first / acc.second);
    s.counts.push_back(acc.second);
  }
  s.r0 = s.centers.back();
  return s;
}

double logistic_decay(double x, double theta2, double theta3) {
  const double z = theta3 * (x - theta2);
  return z > 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

double logistic_fraction(double x, double theta2, double theta3, double r0) {
  // l(x) - l(r0) = sinh(t3 (r0-x)/2) / (2 cosh(t3 (x-t2)/2) cosh(t3 (r0-t2)/2)).
  const double a_x = 0.5 * theta3 * (r0 - x);
  const double a_0 = 0.5 * theta3 * r0;
  if (!(a_0 > 1e-8)) return (r0 - x) / r0;
  if (a_x == 0.0) return 0.0;
  const double sign = a_x > 0.0 ? 1.0 : -1.0;
  const double log_ratio = log_sinh(std::abs(a_x)) - log_sinh(a_0) +
                           log_cosh(0.5 * theta3 * theta2) -
                           log_cosh(0.5 * theta3 * (x - theta2));
  return sign * std::exp(log_ratio);
}

double scaled_sigmoid(double x, const SigmoidParams& p) {
  return (p.theta1 - p.theta4) * logistic_fraction(x, p.theta2, p.theta3, p.r0) + p.theta4;
}

SigmoidParams fit_sigmoid_nls(const SquintSamples& samples) {
  const std::size_t m = samples.centers.size();
  if (m < 8) throw ArgumentError("fit_sigmoid_nls needs at least 8 bins, got " + std::to_string(m));
  const auto [lo_it, hi_it] = std::minmax_element(samples.means.begin(), samples.means.end());
  const double vmin = *lo_it;
  const double vmax = *hi_it;
  const double mean = std::accumulate(samples.means.begin(), samples.means.end(), 0.0) / m;
  double tss = 0.0;
  for (double v : samples.means) tss += (v - mean) * (v - mean);
  if (!(vmax - vmin > 1e-12 * std::max(1.0, std::abs(vmax))))
    throw DegenerateInputError("fit_sigmoid_nls: index values are constant over distance");

  const double r0 = samples.r0;
  const double mid = 0.5 * (vmin + vmax);
  double theta2 = 0.5 * r0;
  for (std::size_t i = 0; i < m; ++i)
    if (samples.means[i] < mid) {
      theta2 = samples.centers[i];
      break;
    }

  Eigen::Vector4d v(vmax, theta2, std::log(4.0 / r0), vmin);
  SigmoidParams cur = unpack(v, r0);
  Eigen::VectorXd res = residuals(samples, cur);
  double sse = res.squaredNorm();
  double lambda = 1e-3;
  const double sse_floor = 1e-28 * std::max(tss, 1e-300);

  for (int iter = 1; iter <= 500; ++iter) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), 4);
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(v(k)));
      Eigen::Vector4d vp = v;
      Eigen::Vector4d vm = v;
      vp(k) += h;
      vm(k) -= h;
      jac.col(k) = (residuals(samples, unpack(vp, r0)) - residuals(samples, unpack(vm, r0))) / (2 * h);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * res;

    bool improved = false;
    while (lambda < 1e16) {
      Eigen::Matrix4d a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d delta = a.ldlt().solve(-jtr);
      const Eigen::Vector4d trial = v + delta;
      const SigmoidParams tp = unpack(trial, r0);
      const Eigen::VectorXd tres = residuals(samples, tp);
      const double tsse = tres.squaredNorm();
      if (std::isfinite(tsse) && tsse < sse) {
        const double rel = (sse - tsse) / std::max(sse, 1e-300);
        v = trial;
        res = tres;
        sse = tsse;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (rel < 1e-10 || sse <= sse_floor) {
          SigmoidParams out = unpack(v, r0);
          out.sse = sse;
          out.iterations = iter;
          return out;
        }
        break;
      }
      lambda *= 2.0;
    }
    if (!improved) {
      // No descent direction left at any damping: stationary point.
      SigmoidParams out = unpack(v, r0);
      out.sse = sse;
      out.iterations = iter;
      return out;
    }
  }
  SigmoidParams best = unpack(v, r0);
  best.sse = sse;
  best.iterations = 500;
  throw SigmoidFitError("fit_sigmoid_nls did not converge in 500 iterations", best);
}

const char* squint_method_name(SquintMethod m) {
  return m == SquintMethod::parametric ? "nls" : "ks";
}

SquintResult squintability_parametric(const SigmoidParams& params) {
  SquintResult out;
  out.method = SquintMethod::parametric;
  out.sigmoid = params;
  out.varsigma =
      std::clamp(logistic_fraction(0.5 * params.r0, params.theta2, params.theta3, params.r0), 0.0, 1.0);
  return out;
}

SquintResult squintability_kernel(const SquintSamples& samples) {
  const std::size_t m = samples.centers.size();
  if (m < 8) throw ArgumentError("squintability_kernel needs at least 8 bins, got " + std::to_string(m));
  const double cmean = std::accumulate(samples.centers.begin(), samples.centers.end(), 0.0) / m;
  double var = 0.0;
  for (double c : samples.centers) var += (c - cmean) * (c - cmean);
  const double sd = std::sqrt(var / static_cast<double>(m - 1));
  // Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) m^(-1/5).
  std::vector<double> sorted = samples.centers;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(m - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < m ? sorted[i] + frac * (sorted[i + 1] - sorted[i]) : sorted[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);

  auto smooth = [&](double x) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double z = (x - samples.centers[i]) / h;
      const double w = std::exp(-0.5 * z * z);
      num += w * samples.means[i];
      den += w;
    }
    return num / den;
  };

  constexpr int kGrid = 200;
  const double lo = samples.centers.front();
  const double hi = samples.centers.back();
  const double dx = (hi - lo) / (kGrid - 1);
  std::vector<double> g(kGrid);
  for (int k = 0; k < kGrid; ++k) g[static_cast<std::size_t>(k)] = smooth(lo + k * dx);

  SquintResult out;
  out.method = SquintMethod::kernel;
  out.bandwidth = h;
  for (int k = 0; k < kGrid; ++k) {
    const std::size_t kk = static_cast<std::size_t>(k);
    double slope = 0.0;
    if (k == 0) slope = (g[1] - g[0]) / dx;
    else if (k == kGrid - 1) slope = (g[kk] - g[kk - 1]) / dx;
    else slope = (g[kk + 1] - g[kk - 1]) / (2.0 * dx);
    if (std::abs(slope) > out.max_gradient) {
      out.max_gradient = std::abs(slope);
      out.max_dist = lo + k * dx;
    }
  }
  if (!(out.max_gradient > 1e-12 * std::max(1.0, std::abs(g.front())))) {
    out.max_gradient = 0.0;
    out.max_dist = 0.0;
  }
  out.varsigma = out.max_gradient * out.max_dist;
  return out;
}

SquintReport squintability(const Dataset& x, const IndexFn& index, int d, const Basis& optimum,
                           SquintMethod method, const SquintSampling& sampling,
                           double bin_width) {
  const auto raw = sample_bases_squint(x, index, d, optimum, sampling);
  SquintReport report;
  report.raw_points = raw.size();
  report.samples = bin_average(raw, bin_width);
  report.result = method == SquintMethod::parametric
                      ? squintability_parametric(fit_sigmoid_nls(report.samples))
                      : squintability_kernel(report.samples);
  return report;
}

}  // namespace pursuit
