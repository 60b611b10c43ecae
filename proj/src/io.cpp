#include "pursuit/io.hpp"

#include <fstream>
#include <sstream>

#include "pursuit/data.hpp"
#include "pursuit/errors.hpp"

namespace pursuit {

using nlohmann::json;

namespace {

// JSON has no NaN or Inf; those become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void save_basis_csv(const Basis& a, const std::filesystem::path& path) {
  Dataset x{a.matrix(), {}, "basis"};
  for (Eigen::Index j = 0; j < a.d(); ++j) x.names.push_back("V" + std::to_string(j + 1));
  save_csv(x, path);
}

Basis load_basis_csv(const std::filesystem::path& path) {
  return orthonormalize(load_csv(path).values);
}

json basis_to_json(const Basis& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.p(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.d(); ++j) row.push_back(a.matrix()(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Basis basis_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ParseError("basis must be a nested row-major array");
  const auto p = static_cast<Eigen::Index>(j.size());
  const auto d = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(p, d);
  for (Eigen::Index i = 0; i < p; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw ParseError("basis row " + std::to_string(i + 1) + " has the wrong length");
    for (Eigen::Index c = 0; c < d; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return Basis::from_orthonormal(std::move(m), 1e-8);
}

json to_json(const JsoConfig& c) {
  return {{"n_jelly", c.n_jelly}, {"max_iter", c.max_iter}, {"beta", c.beta},
          {"gamma", c.gamma},     {"seed", c.seed}};
}

json to_json(const CrsConfig& c) {
  return {{"max_tries", c.max_tries}, {"alpha", c.alpha}, {"max_iter", c.max_iter}, {"seed", c.seed}};
}

std::string opt_run_to_jsonl(const OptRun& run, const std::string& data_provenance) {
  std::ostringstream out;
  json header = {{"type", "header"},
                 {"optimizer", run.optimizer},
                 {"index", run.index},
                 {"d", run.d},
                 {"p", run.best_basis.p()},
                 {"seed", run.seed},
                 {"data", data_provenance},
                 {"best_value", number(run.best_value)},
                 {"best_basis", basis_to_json(run.best_basis)},
                 {"iterations", run.iterations},
                 {"evaluations", run.records.size()},
                 {"invalid_evaluations", run.invalid_evaluations}};
  header["config"] = std::visit([](const auto& c) { return to_json(c); }, run.config);
  out << header.dump() << '\n';
  for (const auto& r : run.records) {
    json rec = {{"type", "eval"},
                {"iter", r.iter},
                {"member", r.member},
                {"value", number(r.value)},
                {"accepted", r.accepted},
                {"c_t", r.c_t ? json(*r.c_t) : json(nullptr)},
                {"motion", motion_name(r.motion)},
                {"basis", basis_to_json(r.basis)}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

ParsedTrace parse_jsonl(const std::string& text) {
  ParsedTrace t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("type", "") == "header") t.header = std::move(j);
    else t.records.push_back(std::move(j));
  }
  return t;
}

json to_json(const SmoothnessFit& fit) {
  return {{"metric", "smoothness"},
          {"smoothness", fit.params.nu},
          {"params",
           {{"nu", fit.params.nu},
            {"eta", fit.params.eta},
            {"len", fit.params.len},
            {"sigma", fit.params.sigma}}},
          {"loglik", number(fit.loglik)},
          {"n_bases", fit.n_bases},
          {"converged", fit.converged},
          {"nu_at_bound", fit.nu_at_bound},
          {"nu_bounds", {kNuMin, kNuMax}},
          {"y_mean", fit.y_mean},
          {"likelihood_evaluations", fit.evaluations}};
}

json to_json(const SquintResult& result, const SquintSamples& samples) {
  json j = {{"metric", "squintability"},
            {"squintability", number(result.varsigma)},
            {"method", squint_method_name(result.method)},
            {"n_bins", samples.centers.size()},
            {"bin_width", samples.bin_width},
            {"r0", samples.r0}};
  if (result.sigmoid) {
    const SigmoidParams& s = *result.sigmoid;
    j["sigmoid"] = {{"theta1", s.theta1}, {"theta2", s.theta2}, {"theta3", s.theta3},
                    {"theta4", s.theta4}, {"r0", s.r0},         {"sse", s.sse},
                    {"iterations", s.iterations}};
  }
  if (result.method == SquintMethod::kernel) {
    j["max_d"] = result.max_gradient;
    j["max_dist"] = result.max_dist;
    j["bandwidth"] = result.bandwidth;
  }
  return j;
}

std::string squint_samples_csv(const SquintSamples& samples) {
  std::ostringstream out;
  out << "bin,mean_value,count\n";
  for (std::size_t i = 0; i < samples.centers.size(); ++i)
    out << format_double(samples.centers[i]) << ',' << format_double(samples.means[i]) << ','
        << samples.counts[i] << '\n';
  return out.str();
}

json to_json(const ExperimentDesign& d) {
  json j = {{"shape", d.shape},         {"n", d.n},
            {"p", d.p},                 {"d", d.d},
            {"index", d.index},         {"optimizer", d.optimizer},
            {"n_reps", d.n_reps},       {"success_tol", d.success_tol},
            {"master_seed", d.master_seed}, {"n_boot", d.n_boot}};
  j["optimizer_config"] = d.optimizer == "jso" ? to_json(d.jso) : to_json(d.crs);
  j["optimizer_config"].erase("seed");
  return j;
}

std::string run_summary_jsonl(const RunSummary& summary) {
  std::ostringstream out;
  const json design = to_json(summary.design);
  for (const auto& rep : summary.reps) {
    json j = {{"design", design},
              {"rep", rep.rep},
              {"seed", rep.seed},
              {"ok", rep.ok},
              {"best_value", rep.ok ? number(rep.best_value) : json(nullptr)},
              {"basis", rep.best_basis ? basis_to_json(*rep.best_basis) : json(nullptr)},
              {"iterations", rep.iterations},
              {"evaluations", rep.evaluations},
              {"wall_time", rep.wall_time}};
    if (!rep.ok) j["error"] = rep.error;
    out << j.dump() << '\n';
  }
  return out.str();
}

json summary_json(const RunSummary& s) {
  return {{"design", to_json(s.design)},
          {"data", s.data_provenance},
          {"success_rate", s.success_rate},
          {"ci", {s.ci_lo, s.ci_hi}},
          {"failed_reps", s.failed_reps},
          {"wall_time", s.wall_time}};
}

json to_json(const GlmFit& fit) {
  json terms = json::array();
  for (const auto& t : fit.terms)
    terms.push_back({{"term", t.name},
                     {"coef", t.coef},
                     {"se", number(t.se)},
                     {"OR", t.odds_ratio},
                     {"ci_lo", number(t.ci_lo)},
                     {"ci_hi", number(t.ci_hi)},
                     {"t", number(t.t_value)},
                     {"p", number(t.p_value)}});
  return {{"family", "quasibinomial"},
          {"link", "logit"},
          {"terms", terms},
          {"dispersion", number(fit.dispersion)},
          {"deviance", fit.deviance},
          {"null_deviance", fit.null_deviance},
          {"df_residual", fit.df_residual},
          {"df_null", fit.df_null},
          {"iterations", fit.iterations},
          {"separation_warning", fit.separation_warning}};
}

std::string huber_csv(const HuberCurve& curve) {
  std::ostringstream out;
  out << "angle,value\n";
  for (std::size_t i = 0; i < curve.angles.size(); ++i)
    out << format_double(curve.angles[i]) << ',' << format_double(curve.values[i]) << '\n';
  return out.str();
}

}  // namespace pursuit
