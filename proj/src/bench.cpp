#include "pursuit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <omp.h>

#include "pursuit/errors.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

namespace {

// Index of the data stream under a master seed; reps use 0, 1, 2, ...
constexpr std::uint64_t kDataStream = 0xda7a5eedULL;

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Dataset simulate_shape(const std::string& shape, int n, int p, std::uint64_t seed) {
  if (shape == "pipe") return gen_pipe(n, p, seed);
  if (shape == "sine") return gen_sine(n, p, seed);
  if (shape == "trimodal") return gen_trimodal(n, seed);
  if (shape == "randu") return gen_randu(n, static_cast<std::uint32_t>(seed | 1U));
  throw ArgumentError("unknown shape '" + shape + "'; expected pipe, sine, trimodal or randu");
}

Basis structure_plane(int p) {
  if (p < 3) throw ArgumentError("structure_plane needs p >= 3");
  return Basis::from_orthonormal(Eigen::MatrixXd::Identity(p, 2));
}

void ExperimentDesign::validate() const {
  if (n_reps < 1) throw ArgumentError("n_reps must be >= 1");
  if (!(success_tol > 0.0)) throw ArgumentError("success_tol must be > 0");
  if (optimizer != "jso" && optimizer != "crs")
    throw ArgumentError("optimizer must be 'jso' or 'crs', got '" + optimizer + "'");
  if (optimizer == "jso") jso.validate();
  else crs.validate();
  if (n_boot < 1) throw ArgumentError("n_boot must be >= 1");
}

double success_rate(std::span<const double> best_values, double tol) {
  if (best_values.empty()) throw ArgumentError("success_rate needs at least one value");
  double best = -std::numeric_limits<double>::infinity();
  for (double v : best_values)
    if (std::isfinite(v)) best = std::max(best, v);
  std::size_t hits = 0;
  for (double v : best_values)
    if (std::isfinite(v) && v >= best - tol) ++hits;
  return static_cast<double>(hits) / static_cast<double>(best_values.size());
}

std::pair<double, double> bootstrap_ci(std::span<const double> best_values, double tol,
                                       int n_boot, std::uint64_t seed) {
  if (best_values.empty()) throw ArgumentError("bootstrap_ci needs at least one value");
  if (n_boot < 1) throw ArgumentError("n_boot must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, best_values.size() - 1);
  std::vector<double> resample(best_values.size());
  std::vector<double> rates(static_cast<std::size_t>(n_boot));
  for (auto& rate : rates) {
    for (auto& v : resample) v = best_values[pick(rng)];
    rate = success_rate(resample, tol);
  }
  return {percentile(rates, 0.025), percentile(rates, 0.975)};
}

RunSummary run_experiment(const ExperimentDesign& design) {
  design.validate();
  const Dataset data =
      simulate_shape(design.shape, design.n, design.p, derive_seed(design.master_seed, kDataStream));
  return run_experiment(design, data);
}

RunSummary run_experiment(const ExperimentDesign& design, const Dataset& data) {
  design.validate();
  const IndexFn index = registry_lookup(design.index);
  const auto start = std::chrono::steady_clock::now();

  std::vector<RepResult> reps(static_cast<std::size_t>(design.n_reps));
  const int threads = design.threads > 0 ? design.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int r = 0; r < design.n_reps; ++r) {
    RepResult& rep = reps[static_cast<std::size_t>(r)];
    rep.rep = r;
    rep.seed = derive_seed(design.master_seed, static_cast<std::uint64_t>(r));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      OptRun run = [&] {
        if (design.optimizer == "jso") {
          JsoConfig cfg = design.jso;
          cfg.seed = rep.seed;
          return jso_run(data, index, design.d, cfg);
        }
        CrsConfig cfg = design.crs;
        cfg.seed = rep.seed;
        return crs_run(data, index, design.d, cfg);
      }();
      rep.ok = std::isfinite(run.best_value);
      if (!rep.ok) rep.error = "no finite index value found";
      rep.best_value = run.best_value;
      rep.best_basis = run.best_basis;
      rep.iterations = run.iterations;
      rep.evaluations = static_cast<int>(run.records.size());
    } catch (const std::exception& e) {
      rep.ok = false;
      rep.error = e.what();
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  RunSummary summary;
  summary.design = design;
  summary.data_provenance = data.provenance;
  std::vector<double> values;
  values.reserve(reps.size());
  for (const auto& rep : reps) {
    values.push_back(rep.ok ? rep.best_value : std::numeric_limits<double>::quiet_NaN());
    if (!rep.ok) ++summary.failed_reps;
  }
  summary.success_rate = success_rate(values, design.success_tol);
  std::tie(summary.ci_lo, summary.ci_hi) =
      bootstrap_ci(values, design.success_tol, design.n_boot,
                   derive_seed(design.master_seed, kDataStream + 1));
  summary.reps = std::move(reps);
  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

HuberCurve huber_curve(const Dataset& x2, const IndexFn& index, int n_angles) {
  if (x2.p() != 2) throw ArgumentError("huber_curve expects 2-column data");
  if (!index.supports(1)) throw ArgumentError("index '" + index.name + "' does not support d=1");
  if (n_angles < 1) throw ArgumentError("n_angles must be >= 1");
  HuberCurve curve;
  curve.angles.resize(static_cast<std::size_t>(n_angles));
  curve.values.resize(static_cast<std::size_t>(n_angles));
  for (int k = 0; k < n_angles; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n_angles;
    const Eigen::VectorXd y = x2.values.col(0) * std::cos(a) + x2.values.col(1) * std::sin(a);
    curve.angles[static_cast<std::size_t>(k)] = a;
    curve.values[static_cast<std::size_t>(k)] = index(y);
  }
  double sum = 0.0;
  std::size_t best = 0;
  for (std::size_t k = 0; k < curve.values.size(); ++k) {
    sum += curve.values[k];
    if (curve.values[k] > curve.values[best]) best = k;
  }
  curve.mean = sum / n_angles;
  curve.argmax_angle = curve.angles[best];
  return curve;
}

}  // namespace pursuit
