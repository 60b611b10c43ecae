#pragma once

// Jellyfish Search Optimizer and Creeping Random Search over projection
// bases. Both maximize f(XA) subject to A'A = I and record a full trace.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pursuit/data.hpp"
#include "pursuit/indexes.hpp"
#include "pursuit/manifold.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

struct JsoConfig {
  int n_jelly = 20;
  int max_iter = 50;
  double beta = 3.0;   // ocean-current attraction
  double gamma = 0.1;  // passive-motion scale
  std::uint64_t seed = 0;

  void validate() const;
};

struct CrsConfig {
  int max_tries = 1000;
  double alpha = 0.5;
  int max_iter = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Motion { initial, ocean_current, passive, active, random_step };
const char* motion_name(Motion m);

struct TraceRecord {
  int iter = 0;
  int member = 0;
  Basis basis;  // no default: records are built whole
  double value = 0.0;
  bool accepted = false;
  std::optional<double> c_t;
  Motion motion = Motion::initial;
};

struct OptRun {
  std::string optimizer;  // "jso" | "crs"
  std::string index;
  int d = 0;
  std::variant<JsoConfig, CrsConfig> config;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  Basis best_basis;
  double best_value = 0.0;
  /// Completed iterations (JSO) or accepted moves (CRS).
  int iterations = 0;
  /// Candidates whose index value was non-finite or whose evaluation threw.
  int invalid_evaluations = 0;
};

/// Population state carried between JSO iterations.
struct JsoState {
  std::vector<Basis> population;
  std::vector<double> values;
  std::size_t best = 0;

  const Basis& best_basis() const { return population[best]; }
  double best_value() const { return values[best]; }
};

/// |(1 - t/max_iter)(2r - 1)| for a given uniform draw r.
double time_control_value(int t, int max_iter, double r);

/// Draws r ~ U(0,1) and returns time_control_value.
double time_control(int t, int max_iter, Rng& rng);

/// f(XA); NaN when the index throws or returns a non-finite value.
double evaluate_index(const IndexFn& index, const Dataset& x, const Basis& a);

/// One JSO iteration. All random draws happen serially before any index
/// evaluation, so results do not depend on evaluation scheduling.
/// Appends one TraceRecord per member to `trace` when non-null and bumps
/// `invalid` for rejected non-finite evaluations.
JsoState jso_step(const JsoState& state, int t, const JsoConfig& cfg, const IndexFn& index,
                  const Dataset& x, Rng& rng, std::vector<TraceRecord>* trace = nullptr,
                  int* invalid = nullptr);

OptRun jso_run(const Dataset& x, const IndexFn& index, int d, const JsoConfig& cfg);

OptRun crs_run(const Dataset& x, const IndexFn& index, int d, const CrsConfig& cfg);

}  // namespace pursuit
