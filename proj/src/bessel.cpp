#include <cmath>
#include <limits>
#include <numbers>

#include "pursuit/errors.hpp"
#include "pursuit/metrics.hpp"

namespace pursuit {

namespace {

constexpr double kEps = 1e-16;
constexpr double kEulerGamma = 0.5772156649015329;
// Taylor coefficients of 1/Gamma(z) (Abramowitz & Stegun 6.1.34), c3 and c4.
constexpr double kC3 = -0.6558780715202538;
constexpr double kC4 = -0.0420026350340952;

}  // namespace

BesselK::BesselK(double nu) : nu_(std::abs(nu)) {
  if (!std::isfinite(nu_)) throw ArgumentError("bessel_k: order must be finite");
  steps_ = static_cast<int>(nu_ + 0.5);
  mu_ = nu_ - steps_;
  // gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.
  gampl_ = 1.0 / std::tgamma(1.0 + mu_);
  gammi_ = 1.0 / std::tgamma(1.0 - mu_);
  gam2_ = 0.5 * (gammi_ + gampl_);
  if (std::abs(mu_) < 1e-4) {
    gam1_ = -(kEulerGamma + kC4 * mu_ * mu_);
    gam2_ = 1.0 + kC3 * mu_ * mu_;
  } else {
    gam1_ = (gammi_ - gampl_) / (2.0 * mu_);
  }
  log_half_gamma_ = nu_ > 0.0 ? std::lgamma(nu_) - std::numbers::ln2 : 0.0;
}

double BesselK::operator()(double x) const {
  if (!(x > 0.0)) throw ArgumentError("bessel_k: argument must be > 0");
  if (x > 745.0) return 0.0;  // exp(-x) underflows

  const double mu = mu_;
  const double xi2 = 2.0 / x;
  double kmu = 0.0;
  double k1 = 0.0;

  if (x < 2.0) {
    // Temme's series.
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    const double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double ff = fact * (gam1_ * std::cosh(e) + gam2_ * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl_;
    double q = 0.5 / (e * gammi_);
    double c = 1.0;
    const double dd = x2 * x2;
    double sum1 = p;
    for (int i = 1; i < 500; ++i) {
      ff = (i * ff + p + q) / (i * i - mu * mu);
      c *= dd / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    kmu = sum;
    k1 = sum1 * xi2;
  } else {
    // Steed's continued fraction CF2.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu * mu;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 10000; ++i) {
      a -= 2 * i;
      c = -a * c / (i + 1.0);
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    h = a1 * h;
    kmu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    k1 = kmu * (mu + x + 0.5 - h) / x;
  }

  for (int i = 1; i <= steps_; ++i) {
    const double next = (mu + i) * xi2 * k1 + kmu;
    kmu = k1;
    k1 = next;
  }
  if (std::isfinite(kmu)) return kmu;

  // Overflow: leading small-x asymptotic Gamma(nu)/2 (2/x)^nu.
  const double log_val = log_half_gamma_ + nu_ * std::log(2.0 / x);
  return log_val < std::log(std::numeric_limits<double>::max())
             ? std::exp(log_val)
             : std::numeric_limits<double>::max();
}

double bessel_k(double nu, double x) { return BesselK(nu)(x); }

}  // namespace pursuit
