#include "pursuit/indexes.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "pursuit/errors.hpp"

namespace pursuit {

namespace {

double mean_gaussian_kernel(ProjectedRef y) {
  const Eigen::Index n = y.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += std::exp(-0.5 * y.row(i).squaredNorm());
  return sum / static_cast<double>(n);
}

void require_cols(ProjectedRef y, Eigen::Index d, const char* name) {
  if (y.cols() != d)
    throw ArgumentError(std::string(name) + " expects " + std::to_string(d) +
                        "-column input, got " + std::to_string(y.cols()));
}

// Penalized regression spline in Demmler-Reinsch form: every smoothing
// parameter costs O(K) once the basis is diagonalized.
class PenalizedSpline {
 public:
  PenalizedSpline(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const int nseg = static_cast<int>(std::clamp<std::size_t>(n / 4, 2, 10));
    const int k = nseg + 3;
    const double width = (hi - lo) / nseg;

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd bty = Eigen::VectorXd::Zero(k);
    const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    yy_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - lo) / width;
      const int seg = std::clamp(static_cast<int>(std::floor(u)), 0, nseg - 1);
      const double t = u - seg;
      const double t2 = t * t;
      const double t3 = t2 * t;
      const std::array<double, 4> b = {(1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0,
                                       (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
                                       (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
      const double yc = y[i] - ymean;
      yy_ += yc * yc;
      for (int a = 0; a < 4; ++a) {
        bty(seg + a) += b[a] * yc;
        for (int c = 0; c < 4; ++c) gram(seg + a, seg + c) += b[a] * b[c];
      }
    }

    Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(k - 2, k);
    for (int r = 0; r < k - 2; ++r) {
      diff(r, r) = 1.0;
      diff(r, r + 1) = -2.0;
      diff(r, r + 2) = 1.0;
    }
    const Eigen::MatrixXd penalty = diff.transpose() * diff;

    gram.diagonal().array() += 1e-10 * gram.trace() / k;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    const Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd s = linv * penalty * linv.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    shrink_ = eig.eigenvalues().cwiseMax(0.0);
    z2_ = (eig.eigenvectors().transpose() * (linv * bty)).array().square();
    n_ = static_cast<double>(n);
    smax_ = std::max(shrink_.maxCoeff(), 1e-300);
  }

  double total_ss() const { return yy_; }

  double rss(double lambda) const {
    double yf = 0.0;
    double ff = 0.0;
    for (Eigen::Index i = 0; i < shrink_.size(); ++i) {
      const double h = 1.0 / (1.0 + lambda * shrink_(i));
      yf += z2_(i) * h;
      ff += z2_(i) * h * h;
    }
    return std::max(yy_ - 2.0 * yf + ff, 0.0);
  }

  double edf(double lambda) const {
    return (1.0 / (1.0 + lambda * shrink_.array())).sum();
  }

  double gcv(double log_rho) const {
    const double lambda = std::pow(10.0, log_rho) / smax_;
    const double denom = n_ - edf(lambda);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return n_ * rss(lambda) / (denom * denom);
  }

  /// Residual sum of squares at the GCV-optimal smoothing parameter.
  double best_rss() const {
    constexpr double kLo = -4.0;
    constexpr double kHi = 10.0;
    constexpr double kStep = 0.25;
    double best_rho = kLo;
    double best = std::numeric_limits<double>::infinity();
    for (double rho = kLo; rho <= kHi + 1e-9; rho += kStep) {
      const double g = gcv(rho);
      if (g < best) {
        best = g;
        best_rho = rho;
      }
    }
    // Golden-section refinement inside the bracketing grid cell.
    double a = std::max(kLo, best_rho - kStep);
    double b = std::min(kHi, best_rho + kStep);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double gc = gcv(c);
    double gd = gcv(d);
    for (int it = 0; it < 40; ++it) {
      if (gc < gd) {
        b = d;
        d = c;
        gd = gc;
        c = b - ratio * (b - a);
        gc = gcv(c);
      } else {
        a = c;
        c = d;
        gc = gd;
        d = a + ratio * (b - a);
        gd = gcv(d);
      }
    }
    const double rho = gc < gd ? c : d;
    const double chosen = std::min(gc, gd) < best ? rho : best_rho;
    return rss(std::pow(10.0, chosen) / smax_);
  }

 private:
  Eigen::VectorXd shrink_;
  Eigen::ArrayXd z2_;
  double yy_ = 0.0;
  double n_ = 0.0;
  double smax_ = 1.0;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

bool IndexFn::supports(int d) const {
  if (d < 1) return false;
  return supported_d.empty() ||
         std::find(supported_d.begin(), supported_d.end(), d) != supported_d.end();
}

int IndexFn::default_d() const {
  return supported_d.empty() ? 2 : *std::min_element(supported_d.begin(), supported_d.end());
}

double holes(ProjectedRef y) {
  const double d = static_cast<double>(y.cols());
  return (1.0 - mean_gaussian_kernel(y)) / (1.0 - std::exp(-0.5 * d));
}

double cmass(ProjectedRef y) {
  const double d = static_cast<double>(y.cols());
  const double floor = std::exp(-0.5 * d);
  return (mean_gaussian_kernel(y) - floor) / (1.0 - floor);
}

double skewness1d(ProjectedRef y) {
  require_cols(y, 1, "skewness1d");
  const Eigen::Index n = y.rows();
  if (n < 3) throw ArgumentError("skewness1d needs at least 3 observations");
  const double mean = y.col(0).mean();
  double m2 = 0.0;
  double m3 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = y(i, 0) - mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  if (!(m2 > 1e-300)) throw DegenerateInputError("skewness1d: zero variance");
  return m3 / std::pow(m2, 1.5);
}

int norm_bin_count(Eigen::Index n) {
  const int b = static_cast<int>(std::ceil(2.0 * std::pow(static_cast<double>(n), 0.4)));
  return std::clamp(b, 2, 20);
}

double chi_square_counts(std::span<const double> counts, double expected) {
  double chi2 = 0.0;
  for (double o : counts) chi2 += (o - expected) * (o - expected) / expected;
  return chi2;
}

double norm_bin(ProjectedRef y) { return norm_bin(y, norm_bin_count(y.rows())); }

double norm_bin(ProjectedRef y, int bins) {
  require_cols(y, 1, "norm_bin");
  if (bins < 2) throw ArgumentError("norm_bin needs at least 2 bins");
  const Eigen::Index n = y.rows();
  if (n < 2) throw ArgumentError("norm_bin needs at least 2 observations");
  const double mean = y.col(0).mean();
  const double sd = std::sqrt((y.col(0).array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 1e-300)) throw DegenerateInputError("norm_bin: zero variance");

  const boost::math::normal_distribution<double> normal;
  std::vector<double> edges(static_cast<std::size_t>(bins - 1));
  for (int k = 1; k < bins; ++k)
    edges[static_cast<std::size_t>(k - 1)] =
        boost::math::quantile(normal, static_cast<double>(k) / bins);

  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (y(i, 0) - mean) / sd;
    const auto bin = std::upper_bound(edges.begin(), edges.end(), z) - edges.begin();
    counts[static_cast<std::size_t>(bin)] += 1.0;
  }
  return chi_square_counts(counts, static_cast<double>(n) / bins);
}

double dcor2d(ProjectedRef y) {
  require_cols(y, 2, "dcor2d");
  const Eigen::Index n = y.rows();
  if (n < 2) return 0.0;
  std::vector<double> row_a(static_cast<std::size_t>(n), 0.0);
  std::vector<double> row_b(static_cast<std::size_t>(n), 0.0);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = y(i, 0);
    const double yi = y(i, 1);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = std::abs(xi - y(j, 0));
      const double b = std::abs(yi - y(j, 1));
      row_a[static_cast<std::size_t>(i)] += a;
      row_a[static_cast<std::size_t>(j)] += a;
      row_b[static_cast<std::size_t>(i)] += b;
      row_b[static_cast<std::size_t>(j)] += b;
      sab += a * b;
      saa += a * a;
      sbb += b * b;
    }
  }
  const double nn = static_cast<double>(n);
  double ra_rb = 0.0;
  double ra_ra = 0.0;
  double rb_rb = 0.0;
  double tot_a = 0.0;
  double tot_b = 0.0;
  for (std::size_t i = 0; i < row_a.size(); ++i) {
    ra_rb += row_a[i] * row_b[i];
    ra_ra += row_a[i] * row_a[i];
    rb_rb += row_b[i] * row_b[i];
    tot_a += row_a[i];
    tot_b += row_b[i];
  }
  // V-statistic identity: mean(a.b) - 2 mean_i(abar_i bbar_i) + abar bbar,
  // with off-diagonal sums counted twice.
  auto dcov2 = [&](double cross, double rows, double ta, double tb) {
    return 2.0 * cross / (nn * nn) - 2.0 * rows / (nn * nn * nn) + ta * tb / (nn * nn * nn * nn);
  };
  const double vxy = dcov2(sab, ra_rb, tot_a, tot_b);
  const double vxx = dcov2(saa, ra_ra, tot_a, tot_a);
  const double vyy = dcov2(sbb, rb_rb, tot_b, tot_b);
  const double scale = std::sqrt(std::max(vxx, 0.0) * std::max(vyy, 0.0));
  if (!(vxx > 1e-14 * tot_a * tot_a / (nn * nn * nn * nn)) ||
      !(vyy > 1e-14 * tot_b * tot_b / (nn * nn * nn * nn)) || !(scale > 0.0))
    return 0.0;
  return std::clamp(vxy / scale, 0.0, 1.0);
}

double spline_r2(std::span<const double> regressor, std::span<const double> response) {
  if (regressor.size() != response.size())
    throw ArgumentError("spline_r2: regressor and response lengths differ");
  if (regressor.size() < 4) return 0.0;
  const auto [lo, hi] = std::minmax_element(regressor.begin(), regressor.end());
  if (!(*hi - *lo > 1e-12 * std::max(1.0, std::abs(*hi)))) return 0.0;
  const PenalizedSpline fit(regressor, response);
  if (!(fit.total_ss() > 0.0)) return 0.0;
  return std::clamp(1.0 - fit.best_rss() / fit.total_ss(), 0.0, 1.0);
}

double splines2d(ProjectedRef y) {
  require_cols(y, 2, "splines2d");
  const Eigen::VectorXd a = y.col(0);
  const Eigen::VectorXd b = y.col(1);
  const std::span<const double> sa(a.data(), static_cast<std::size_t>(a.size()));
  const std::span<const double> sb(b.data(), static_cast<std::size_t>(b.size()));
  return std::max(spline_r2(sa, sb), spline_r2(sb, sa));
}

double stringy(ProjectedRef y) {
  require_cols(y, 2, "stringy");
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) pts.push_back({y(i, 0), y(i, 1)});
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) throw DegenerateInputError("stringy needs at least 3 distinct points");

  // Dense Prim.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> parent(n, 0);
  std::vector<char> in_tree(n, 0);
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  double total = 0.0;
  std::size_t cur = 0;
  in_tree[0] = 1;
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t next = n;
    double next_w = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double dx = pts[cur][0] - pts[j][0];
      const double dy = pts[cur][1] - pts[j][1];
      const double w = std::sqrt(dx * dx + dy * dy);
      if (w < best[j]) {
        best[j] = w;
        parent[j] = cur;
      }
      if (best[j] < next_w) {
        next_w = best[j];
        next = j;
      }
    }
    in_tree[next] = 1;
    adj[next].emplace_back(parent[next], next_w);
    adj[parent[next]].emplace_back(next, next_w);
    total += next_w;
    cur = next;
  }

  // Weighted tree diameter: farthest node from any node, then farthest from it.
  auto farthest = [&](std::size_t start) {
    std::vector<double> dist(n, -1.0);
    std::vector<std::size_t> stack{start};
    dist[start] = 0.0;
    std::size_t arg = start;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (dist[v] > dist[arg]) arg = v;
      for (const auto& [w, len] : adj[v])
        if (dist[w] < 0.0) {
          dist[w] = dist[v] + len;
          stack.push_back(w);
        }
    }
    return std::pair{arg, dist[arg]};
  };
  const auto [end_a, unused] = farthest(0);
  (void)unused;
  const auto [end_b, diameter] = farthest(end_a);
  (void)end_b;
  return diameter / total;
}

std::vector<std::string> registry_names() {
  return {"holes", "cmass", "skewness", "norm_bin", "dcor", "splines", "stringy"};
}

IndexFn registry_lookup(const std::string& name) {
  const std::string key = lower(name);
  if (key == "holes") return {"holes", {}, true, [](ProjectedRef y) { return holes(y); }};
  if (key == "cmass") return {"cmass", {}, true, [](ProjectedRef y) { return cmass(y); }};
  if (key == "skewness")
    return {"skewness", {1}, false, [](ProjectedRef y) { return std::abs(skewness1d(y)); }};
  if (key == "norm_bin")
    return {"norm_bin", {1}, false, [](ProjectedRef y) { return norm_bin(y); }};
  if (key == "dcor") return {"dcor", {2}, false, [](ProjectedRef y) { return dcor2d(y); }};
  if (key == "splines")
    return {"splines", {2}, false, [](ProjectedRef y) { return splines2d(y); }};
  if (key == "stringy" || key == "stringy2")
    return {"stringy", {2}, true, [](ProjectedRef y) { return stringy(y); }};

  std::string available;
  for (const auto& n : registry_names()) available += (available.empty() ? "" : ", ") + n;
  if (key == "mic" || key == "tic" || key == "loess" || key == "skinny")
    throw ArgumentError("index '" + name + "' is out of scope for this toolkit; available: " +
                        available);
  throw ArgumentError("unknown index '" + name + "'; available: " + available);
}

}  // namespace pursuit
