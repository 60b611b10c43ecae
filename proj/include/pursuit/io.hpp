#pragma once

// File output helpers and JSON/CSV encodings of results.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pursuit/bench.hpp"
#include "pursuit/manifold.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/optimize.hpp"

namespace pursuit {

/// Writes `content` to `path` through a sibling temp file and rename, so
/// readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Basis stored as a p x d CSV with header V1..Vd.
void save_basis_csv(const Basis& a, const std::filesystem::path& path);
Basis load_basis_csv(const std::filesystem::path& path);

nlohmann::json basis_to_json(const Basis& a);  // row-major nested array
Basis basis_from_json(const nlohmann::json& j);

nlohmann::json to_json(const JsoConfig& c);
nlohmann::json to_json(const CrsConfig& c);

/// Header line followed by one line per evaluation.
std::string opt_run_to_jsonl(const OptRun& run, const std::string& data_provenance);

struct ParsedTrace {
  nlohmann::json header;
  std::vector<nlohmann::json> records;
};
ParsedTrace parse_jsonl(const std::string& text);

nlohmann::json to_json(const SmoothnessFit& fit);
nlohmann::json to_json(const SquintResult& result, const SquintSamples& samples);
std::string squint_samples_csv(const SquintSamples& samples);

nlohmann::json to_json(const ExperimentDesign& design);
/// One line per rep with design echo, seed, best value and basis.
std::string run_summary_jsonl(const RunSummary& summary);
nlohmann::json summary_json(const RunSummary& summary);

nlohmann::json to_json(const GlmFit& fit);
std::string huber_csv(const HuberCurve& curve);

}  // namespace pursuit
