#include "pursuit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pursuit/errors.hpp"

namespace pursuit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void require_support(const Dataset& x, const IndexFn& index, int d) {
  if (!index.supports(d))
    throw ArgumentError("index '" + index.name + "' does not support d=" + std::to_string(d));
  if (d >= x.p())
    throw ArgumentError("projection dimension d=" + std::to_string(d) +
                        " must be below data dimension p=" + std::to_string(x.p()));
}

// Candidate in the frame of its predecessor, or nullopt when the raw move
// collapsed the rank.
std::optional<Basis> settle(const Eigen::MatrixXd& raw, const Basis& predecessor) {
  try {
    return orient_align(orthonormalize(raw), predecessor);
  } catch (const DegenerateInputError&) {
    return std::nullopt;
  }
}

}  // namespace

void JsoConfig::validate() const {
  if (n_jelly < 1) throw ArgumentError("JSO needs at least one jellyfish");
  if (max_iter < 1) throw ArgumentError("JSO max_iter must be >= 1");
  if (!(beta > 0.0)) throw ArgumentError("JSO beta must be > 0");
  if (!(gamma > 0.0)) throw ArgumentError("JSO gamma must be > 0");
}

void CrsConfig::validate() const {
  if (max_tries < 1) throw ArgumentError("CRS max_tries must be >= 1");
  if (!(alpha > 0.0)) throw ArgumentError("CRS alpha must be > 0");
  if (max_iter < 1) throw ArgumentError("CRS max_iter must be >= 1");
}

const char* motion_name(Motion m) {
  switch (m) {
    case Motion::initial: return "initial";
    case Motion::ocean_current: return "ocean_current";
    case Motion::passive: return "passive";
    case Motion::active: return "active";
    case Motion::random_step: return "random_step";
  }
  return "unknown";
}

double time_control_value(int t, int max_iter, double r) {
  return std::abs((1.0 - static_cast<double>(t) / max_iter) * (2.0 * r - 1.0));
}

double time_control(int t, int max_iter, Rng& rng) {
  return time_control_value(t, max_iter, uniform01(rng));
}

double evaluate_index(const IndexFn& index, const Dataset& x, const Basis& a) {
  try {
    const Eigen::MatrixXd y = x.values * a.matrix();
    const double v = index(y);
    return std::isfinite(v) ? v : kNaN;
  } catch (const std::exception&) {
    return kNaN;
  }
}

JsoState jso_step(const JsoState& state, int t, const JsoConfig& cfg, const IndexFn& index,
                  const Dataset& x, Rng& rng, std::vector<TraceRecord>* trace, int* invalid) {
  const std::size_t n = state.population.size();
  if (n == 0 || state.values.size() != n)
    throw ArgumentError("jso_step: population and values must be nonempty and equal length");
  const Basis& best = state.best_basis();
  const Eigen::Index p = best.p();
  const Eigen::Index d = best.d();

  // Serial pre-pass: every random draw of this iteration.
  const double c_t = time_control(t, cfg.max_iter, rng);
  Motion motion = Motion::ocean_current;
  if (c_t < 0.5) {
    const double u = uniform01(rng);
    motion = (u > 1.0 - c_t || n < 2) ? Motion::passive : Motion::active;
  }

  std::vector<Eigen::MatrixXd> raw(n);
  if (motion == Motion::ocean_current) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(p, d);
    for (const Basis& a : state.population) mean += orient_align(a, best).matrix();
    mean /= static_cast<double>(n);
    const Eigen::MatrixXd trend = best.matrix() - cfg.beta * uniform01(rng) * mean;
    for (std::size_t i = 0; i < n; ++i)
      raw[i] = state.population[i].matrix() + uniform01(rng) * trend;
  } else if (motion == Motion::passive) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = uniform01(rng);
      raw[i] = state.population[i].matrix() + cfg.gamma * r * normal_matrix(p, d, rng);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 2);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = pick(rng);
      if (j >= i) ++j;
      const double r = uniform01(rng);
      const Eigen::MatrixXd& ai = state.population[i].matrix();
      const Eigen::MatrixXd aj = orient_align(state.population[j], state.population[i]).matrix();
      const Eigen::MatrixXd direction = state.values[j] > state.values[i] ? aj - ai : ai - aj;
      raw[i] = ai + r * direction;
    }
  }

  std::vector<std::optional<Basis>> candidates(n);
  std::vector<double> cand_values(n, kNaN);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    candidates[i] = settle(raw[i], state.population[i]);
    if (candidates[i]) cand_values[i] = evaluate_index(index, x, *candidates[i]);
  }

  JsoState next = state;
  for (std::size_t i = 0; i < n; ++i) {
    const bool valid = std::isfinite(cand_values[i]);
    if (!valid && invalid) ++*invalid;
    const bool accepted = valid && cand_values[i] > state.values[i];
    if (accepted) {
      next.population[i] = *candidates[i];
      next.values[i] = cand_values[i];
    }
    if (trace)
      trace->push_back(TraceRecord{t, static_cast<int>(i),
                                   candidates[i] ? *candidates[i] : state.population[i],
                                   cand_values[i], accepted, c_t, motion});
  }
  next.best = argmax(next.values);
  return next;
}

OptRun jso_run(const Dataset& x, const IndexFn& index, int d, const JsoConfig& cfg) {
  cfg.validate();
  require_support(x, index, d);
  Rng rng(cfg.seed);
  const auto n = static_cast<std::size_t>(cfg.n_jelly);

  std::vector<TraceRecord> trace;
  trace.reserve(n * static_cast<std::size_t>(cfg.max_iter + 1));
  JsoState state;
  int invalid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // A member whose starting value is not finite is redrawn.
    for (int attempt = 0;; ++attempt) {
      Basis a = random_basis(static_cast<int>(x.p()), d, rng);
      const double v = evaluate_index(index, x, a);
      if (std::isfinite(v) || attempt >= 10) {
        if (!std::isfinite(v)) ++invalid;
        trace.push_back(TraceRecord{0, static_cast<int>(i), a, v, true, std::nullopt,
                                    Motion::initial});
        state.population.push_back(std::move(a));
        state.values.push_back(std::isfinite(v) ? v : -std::numeric_limits<double>::infinity());
        break;
      }
      ++invalid;
    }
  }
  state.best = argmax(state.values);

  for (int t = 1; t <= cfg.max_iter; ++t)
    state = jso_step(state, t, cfg, index, x, rng, &trace, &invalid);

  return OptRun{.optimizer = "jso",
                .index = index.name,
                .d = d,
                .config = cfg,
                .seed = cfg.seed,
                .records = std::move(trace),
                .best_basis = state.best_basis(),
                .best_value = state.best_value(),
                .iterations = cfg.max_iter,
                .invalid_evaluations = invalid};
}

OptRun crs_run(const Dataset& x, const IndexFn& index, int d, const CrsConfig& cfg) {
  cfg.validate();
  require_support(x, index, d);
  Rng rng(cfg.seed);
  const int p = static_cast<int>(x.p());

  std::vector<TraceRecord> trace;
  int invalid = 0;
  Basis current = random_basis(p, d, rng);
  double value = evaluate_index(index, x, current);
  if (!std::isfinite(value)) {
    ++invalid;
    value = -std::numeric_limits<double>::infinity();
  }
  trace.push_back(TraceRecord{0, 0, current, value, true, std::nullopt, Motion::initial});

  int moves = 0;
  int fails = 0;
  int tries_this_iter = 0;
  while (fails < cfg.max_tries && moves < cfg.max_iter) {
    const Eigen::MatrixXd raw = current.matrix() + cfg.alpha * normal_matrix(p, d, rng);
    const std::optional<Basis> cand = settle(raw, current);
    const double v = cand ? evaluate_index(index, x, *cand) : kNaN;
    if (!std::isfinite(v)) ++invalid;
    const bool accepted = std::isfinite(v) && v > value;
    trace.push_back(TraceRecord{moves + 1, tries_this_iter, cand ? *cand : current, v, accepted,
                                std::nullopt, Motion::random_step});
    ++tries_this_iter;
    if (accepted) {
      current = *cand;
      value = v;
      ++moves;
      fails = 0;
      tries_this_iter = 0;
    } else {
      ++fails;
    }
  }

  return OptRun{.optimizer = "crs",
                .index = index.name,
                .d = d,
                .config = cfg,
                .seed = cfg.seed,
                .records = std::move(trace),
                .best_basis = current,
                .best_value = value,
                .iterations = moves,
                .invalid_evaluations = invalid};
}

}  // namespace pursuit
