#include "pursuit/cli.hpp"

#include <omp.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pursuit/bench.hpp"
#include "pursuit/data.hpp"
#include "pursuit/errors.hpp"
#include "pursuit/indexes.hpp"
#include "pursuit/io.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/optimize.hpp"

namespace pursuit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDataStream = 0xda7a5eedULL;

// Where a subcommand gets its data: a CSV file or a named generator.
struct DataOptions {
  std::string data;
  std::string shape;
  int n = 1000;
  int p = 6;
  bool sphere = false;
};

struct Options {
  DataOptions in;
  std::uint64_t seed = 0;
  std::string out;
  std::string index = "holes";
  int d = 0;  // 0: index default
  std::string optimizer = "jso";
  JsoConfig jso;
  CrsConfig crs;
  int reps = 50;
  double tol = 0.05;
  int threads = 0;
  int n_boot = 500;
  int n_bases = 0;  // 0: subcommand default
  double step = 0.005;
  double bin_width = 0.005;
  double min_proj_dist = 0.5;
  std::string method = "nls";
  std::string optimal;
  std::string basis_out;
  std::string samples_out;
  int n_angles = 360;
};

const std::vector<std::string> kShapes = {"pipe", "sine", "trimodal", "randu"};

void add_seed(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Master random seed")
      ->envname("PURSUIT_LAB_SEED")
      ->capture_default_str();
}

void add_out(CLI::App* app, Options& o, const std::string& what) {
  app->add_option("-o,--out", o.out, what)->required();
}

void add_config(CLI::App* app) {
  app->set_config("--config", "", "INI file of key = value defaults; flags override it");
}

void add_data(CLI::App* app, Options& o) {
  auto* data = app->add_option("--data", o.in.data, "Input CSV (header row, numeric columns)");
  auto* shape = app->add_option("--shape", o.in.shape, "Generate data instead: pipe|sine|trimodal|randu")
                    ->check(CLI::IsMember(kShapes));
  data->excludes(shape);
  app->add_option("--n", o.in.n, "Rows to generate")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--p", o.in.p, "Columns to generate (pipe, sine)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_flag("--sphere", o.in.sphere, "Apply ZCA whitening to the data");
}

void add_index(CLI::App* app, Options& o) {
  app->add_option("--index", o.index, "Index: holes|cmass|skewness|norm_bin|dcor|splines|stringy")
      ->capture_default_str();
  app->add_option("--d", o.d, "Projection dimension (default: the index's own)");
}

void add_optimizer(CLI::App* app, Options& o) {
  app->add_option("--optimizer", o.optimizer, "jso|crs")
      ->capture_default_str()
      ->check(CLI::IsMember({"jso", "crs"}));
  app->add_option("--jellies", o.jso.n_jelly, "JSO population size")->capture_default_str();
  app->add_option("--iters", o.jso.max_iter, "JSO iterations; CRS accepted-move cap")
      ->capture_default_str();
  app->add_option("--beta", o.jso.beta, "JSO ocean-current attraction")->capture_default_str();
  app->add_option("--gamma", o.jso.gamma, "JSO passive-motion scale")->capture_default_str();
  app->add_option("--max-tries", o.crs.max_tries, "CRS consecutive failed tries before stopping")
      ->capture_default_str();
  app->add_option("--alpha", o.crs.alpha, "CRS step size")->capture_default_str();
}

// Echoes the options of `app` as seen after parsing, for rerunning.
json echo_config(const CLI::App& app, const Options& o) {
  json j;
  j["subcommand"] = app.get_name();
  json opts = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      opts[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (opt->get_type_size() == 0) {
      opts[name] = false;
    } else if (opt->get_default_str().empty()) {
      opts[name] = nullptr;
    } else {
      opts[name] = opt->get_default_str();
    }
  }
  j["options"] = opts;
  j["seed"] = o.seed;
  return j;
}

void write_echo(const CLI::App& app, const Options& o) {
  write_file_atomic(o.out + ".config.json", echo_config(app, o).dump(2) + "\n");
}

Dataset load_data(const Options& o, bool for_simulate) {
  const DataOptions& in = o.in;
  Dataset x = [&] {
    if (!in.data.empty()) return load_csv(in.data);
    if (in.shape.empty()) throw ArgumentError("one of --data or --shape is required");
    const std::uint64_t seed = for_simulate ? o.seed : derive_seed(o.seed, kDataStream);
    return simulate_shape(in.shape, in.n, in.p, seed);
  }();
  return in.sphere ? sphere(x) : x;
}

int resolve_d(const IndexFn& f, const Options& o, const Dataset& x) {
  const int d = o.d > 0 ? o.d : f.default_d();
  if (!f.supports(d))
    throw ArgumentError("index '" + f.name + "' does not support d = " + std::to_string(d));
  if (d >= x.p()) throw ArgumentError("d must be smaller than the data dimension");
  return d;
}

OptRun optimize_once(const Dataset& x, const IndexFn& f, int d, const Options& o) {
  if (o.optimizer == "jso") {
    JsoConfig c = o.jso;
    c.seed = o.seed;
    c.validate();
    return jso_run(x, f, d, c);
  }
  CrsConfig c = o.crs;
  c.seed = o.seed;
  c.max_iter = o.jso.max_iter;
  c.validate();
  return crs_run(x, f, d, c);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CLI::App& app, const Options& o) {
  if (o.in.shape.empty()) throw ArgumentError("--shape is required");
  Dataset x = load_data(o, true);
  save_csv(x, o.out);
  write_echo(app, o);
  std::cout << "wrote " << x.n() << " x " << x.p() << " to " << o.out << '\n';
  return 0;
}

int cmd_optimize(const CLI::App& app, const Options& o) {
  const Dataset x = load_data(o, false);
  const IndexFn f = registry_lookup(o.index);
  const int d = resolve_d(f, o, x);
  const OptRun run = optimize_once(x, f, d, o);
  write_file_atomic(o.out, opt_run_to_jsonl(run, x.provenance));
  if (!o.basis_out.empty()) save_basis_csv(run.best_basis, o.basis_out);
  write_echo(app, o);
  std::cout << run.optimizer << " " << f.name << ": best " << format_double(run.best_value)
            << " after " << run.iterations << " iterations, " << run.records.size()
            << " evaluations\n";
  return 0;
}

int cmd_smoothness(const CLI::App& app, const Options& o) {
  const Dataset x = load_data(o, false);
  const IndexFn f = registry_lookup(o.index);
  const int d = resolve_d(f, o, x);
  const int n_bases = o.n_bases > 0 ? o.n_bases : 500;
  const BasisSample sample = sample_bases_smoothness(x, f, d, n_bases, o.seed);
  const SmoothnessFit fit = fit_smoothness(sample.bases, sample.values);
  json j = to_json(fit);
  j["index"] = f.name;
  j["d"] = d;
  j["data"] = x.provenance;
  j["seed"] = o.seed;
  j["redraws"] = sample.redraws;
  write_file_atomic(o.out, j.dump(2) + "\n");
  write_echo(app, o);
  std::cout << f.name << ": smoothness nu = " << format_double(fit.params.nu)
            << (fit.nu_at_bound ? " (at bound)" : "") << '\n';
  return 0;
}

int cmd_squint(const CLI::App& app, const Options& o) {
  const Dataset x = load_data(o, false);
  const IndexFn f = registry_lookup(o.index);
  const int d = resolve_d(f, o, x);

  std::string source;
  std::optional<Basis> optimum;
  if (!o.optimal.empty()) {
    optimum = load_basis_csv(o.optimal);
    source = "file";
  } else if (o.in.data.empty() && (o.in.shape == "pipe" || o.in.shape == "sine") && d == 2) {
    optimum = structure_plane(static_cast<int>(x.p()));
    source = "generator";
  } else {
    // No known optimum: use the best basis JSO finds.
    JsoConfig c = o.jso;
    c.seed = derive_seed(o.seed, 1);
    optimum = jso_run(x, f, d, c).best_basis;
    source = "jso_fallback";
  }
  if (optimum->p() != x.p() || optimum->d() != d)
    throw ArgumentError("optimal basis shape does not match the data and d");

  SquintSampling s;
  s.n_basis = o.n_bases > 0 ? o.n_bases : 50;
  s.step = o.step;
  s.min_proj_dist = o.min_proj_dist;
  s.seed = o.seed;
  const SquintMethod method = o.method == "ks" ? SquintMethod::kernel : SquintMethod::parametric;
  const SquintReport rep = squintability(x, f, d, *optimum, method, s, o.bin_width);

  json j = to_json(rep.result, rep.samples);
  j["index"] = f.name;
  j["d"] = d;
  j["data"] = x.provenance;
  j["seed"] = o.seed;
  j["optimum_source"] = source;
  j["raw_points"] = rep.raw_points;
  write_file_atomic(o.out, j.dump(2) + "\n");
  if (!o.samples_out.empty()) write_file_atomic(o.samples_out, squint_samples_csv(rep.samples));
  write_echo(app, o);
  std::cout << f.name << ": squintability " << format_double(rep.result.varsigma) << " ("
            << squint_method_name(method) << ", optimum from " << source << ")\n";
  return 0;
}

int cmd_bench(const CLI::App& app, const Options& o) {
  ExperimentDesign design;
  design.shape = o.in.shape.empty() ? "pipe" : o.in.shape;
  design.n = o.in.n;
  design.p = o.in.p;
  design.index = o.index;
  design.optimizer = o.optimizer;
  design.jso = o.jso;
  design.crs = o.crs;
  design.crs.max_iter = o.jso.max_iter;
  design.n_reps = o.reps;
  design.success_tol = o.tol;
  design.master_seed = o.seed;
  design.threads = o.threads;
  design.n_boot = o.n_boot;
  const IndexFn f = registry_lookup(o.index);
  design.d = o.d > 0 ? o.d : f.default_d();
  design.validate();

  RunSummary s;
  if (!o.in.data.empty()) s = run_experiment(design, load_data(o, false));
  else s = run_experiment(design);

  write_file_atomic(o.out, run_summary_jsonl(s));
  write_file_atomic(o.out + ".summary.json", summary_json(s).dump(2) + "\n");
  write_echo(app, o);
  std::cout << "success rate " << format_double(s.success_rate) << " [" << format_double(s.ci_lo)
            << ", " << format_double(s.ci_hi) << "] over " << s.reps.size() << " reps";
  if (s.failed_reps > 0) std::cout << " (" << s.failed_reps << " failed)";
  std::cout << '\n';
  return 0;
}

int cmd_glm(const CLI::App& app, const Options& o) {
  if (o.in.data.empty()) throw ArgumentError("--data is required");
  const Dataset t = load_csv(o.in.data);
  int si = -1, ti = -1;
  std::vector<int> pred;
  std::vector<std::string> names;
  for (int c = 0; c < static_cast<int>(t.names.size()); ++c) {
    if (t.names[c] == "successes") si = c;
    else if (t.names[c] == "trials") ti = c;
    else {
      pred.push_back(c);
      names.push_back(t.names[c]);
    }
  }
  if (si < 0 || ti < 0) throw ArgumentError("table needs 'successes' and 'trials' columns");
  std::vector<GlmRow> rows;
  for (Eigen::Index r = 0; r < t.n(); ++r) {
    GlmRow row{t.values(r, si), t.values(r, ti), {}};
    for (int c : pred) row.predictors.push_back(t.values(r, c));
    rows.push_back(std::move(row));
  }
  const GlmFit fit = fit_quasibinomial_glm(rows, names);
  write_file_atomic(o.out, to_json(fit).dump(2) + "\n");
  write_echo(app, o);
  for (const auto& term : fit.terms)
    std::cout << term.name << ": OR " << format_double(term.odds_ratio) << " p "
              << format_double(term.p_value) << '\n';
  if (fit.separation_warning) std::cout << "warning: possible separation\n";
  return 0;
}

int cmd_huber(const CLI::App& app, const Options& o) {
  const Dataset x = load_data(o, false);
  if (x.p() != 2) throw ArgumentError("huber needs 2-column data");
  const IndexFn f = registry_lookup(o.index);
  const HuberCurve curve = huber_curve(x, f, o.n_angles);
  write_file_atomic(o.out, huber_csv(curve));
  write_echo(app, o);
  std::cout << f.name << ": mean " << format_double(curve.mean) << ", argmax angle "
            << format_double(curve.argmax_angle) << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Projection pursuit optimization and index diagnostics", "pursuit-lab"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset as CSV");
  add_data(sim, o);
  add_seed(sim, o);
  add_out(sim, o, "Output CSV");
  add_config(sim);

  auto* opt = app.add_subcommand("optimize", "Run one optimization and write its trace as JSONL");
  add_data(opt, o);
  add_index(opt, o);
  add_optimizer(opt, o);
  add_seed(opt, o);
  add_out(opt, o, "Output trace (JSONL)");
  opt->add_option("--basis-out", o.basis_out, "Also write the best basis as CSV");
  add_config(opt);

  auto* smooth = app.add_subcommand("smoothness", "Fit the Matern smoothness of an index");
  add_data(smooth, o);
  add_index(smooth, o);
  smooth->add_option("--n-bases", o.n_bases, "Random bases to sample (default 500)");
  add_seed(smooth, o);
  add_out(smooth, o, "Output JSON");
  add_config(smooth);

  auto* squint = app.add_subcommand("squint", "Estimate squintability of an index");
  add_data(squint, o);
  add_index(squint, o);
  squint->add_option("--optimal", o.optimal, "Optimal basis CSV (p rows, d columns)");
  squint->add_option("--n-bases", o.n_bases, "Random starting bases (default 50)");
  squint->add_option("--step", o.step, "Interpolation step in projection distance")
      ->capture_default_str();
  squint->add_option("--bin-width", o.bin_width, "Distance bin width")->capture_default_str();
  squint->add_option("--min-proj-dist", o.min_proj_dist, "Minimum start distance from the optimum")
      ->capture_default_str();
  squint->add_option("--method", o.method, "nls (sigmoid fit) or ks (kernel smooth)")
      ->capture_default_str()
      ->check(CLI::IsMember({"nls", "ks"}));
  squint->add_option("--jellies", o.jso.n_jelly, "JSO population for the fallback optimum")
      ->capture_default_str();
  squint->add_option("--iters", o.jso.max_iter, "JSO iterations for the fallback optimum")
      ->capture_default_str();
  squint->add_option("--samples-out", o.samples_out, "Also write binned samples as CSV");
  add_seed(squint, o);
  add_out(squint, o, "Output JSON");
  add_config(squint);

  auto* bench = app.add_subcommand("bench", "Repeat an optimization and summarize success rate");
  add_data(bench, o);
  add_index(bench, o);
  add_optimizer(bench, o);
  bench->add_option("--reps", o.reps, "Repetitions")->capture_default_str();
  bench->add_option("--tol", o.tol, "Success tolerance below the best value")->capture_default_str();
  bench->add_option("--threads", o.threads, "Concurrent reps (default: all cores)");
  bench->add_option("--n-boot", o.n_boot, "Bootstrap resamples")->capture_default_str();
  add_seed(bench, o);
  add_out(bench, o, "Per-rep JSONL; the summary goes to <out>.summary.json");
  add_config(bench);

  auto* glm = app.add_subcommand("glm", "Quasibinomial logistic regression on a success table");
  glm->add_option("--data", o.in.data, "CSV with successes, trials and predictor columns")
      ->required();
  add_out(glm, o, "Output JSON");
  add_config(glm);

  auto* huber = app.add_subcommand("huber", "Index values over all 1-D projections of 2-D data");
  add_data(huber, o);
  huber->add_option("--index", o.index, "1-D index")->capture_default_str();
  huber->add_option("--n-angles", o.n_angles, "Angles over the full circle")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_seed(huber, o);
  add_out(huber, o, "Output CSV (angle,value)");
  add_config(huber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() != "bench") omp_set_num_threads(1);
  try {
    const std::string name = sub->get_name();
    if (name == "simulate") return cmd_simulate(*sub, o);
    if (name == "optimize") return cmd_optimize(*sub, o);
    if (name == "smoothness") return cmd_smoothness(*sub, o);
    if (name == "squint") return cmd_squint(*sub, o);
    if (name == "bench") return cmd_bench(*sub, o);
    if (name == "glm") return cmd_glm(*sub, o);
    return cmd_huber(*sub, o);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace pursuit::cli
