#include "pursuit/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pursuit/errors.hpp"
#include "pursuit/io.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

namespace {

std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("V" + std::to_string(j + 1));
  return names;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

void fill_noise(Eigen::MatrixXd& m, int first_col, Rng& rng) {
  for (Eigen::Index j = first_col; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = standard_normal(rng);
}

}  // namespace

void Dataset::validate() const {
  if (values.rows() < 2) throw ArgumentError("dataset needs at least 2 rows");
  if (values.cols() < 1) throw ArgumentError("dataset needs at least 1 column");
  if (!values.allFinite()) throw ArgumentError("dataset contains NaN or Inf");
  if (static_cast<Eigen::Index>(names.size()) != values.cols())
    throw ArgumentError("dataset has " + std::to_string(names.size()) + " names for " +
                        std::to_string(values.cols()) + " columns");
}

Dataset make_dataset(Eigen::MatrixXd values, std::string provenance) {
  Dataset x{std::move(values), {}, std::move(provenance)};
  x.names = default_names(x.values.cols());
  x.validate();
  return x;
}

Dataset gen_pipe(int n, int p, std::uint64_t seed, const PipeParams& params) {
  if (p < 2) throw ArgumentError("gen_pipe requires p >= 2, got " + std::to_string(p));
  if (n < 2) throw ArgumentError("gen_pipe requires n >= 2");
  Rng rng(seed);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * uniform01(rng);
    const double radius = 1.0 + params.radius_sd * standard_normal(rng);
    m(i, 0) = radius * std::cos(angle);
    m(i, 1) = radius * std::sin(angle);
  }
  fill_noise(m, 2, rng);
  std::ostringstream prov;
  prov << "pipe(n=" << n << ",p=" << p << ",radius_sd=" << format_double(params.radius_sd)
       << ",seed=" << seed << ")";
  Dataset x = make_dataset(std::move(m), prov.str());
  return params.standardize ? standardize(x) : x;
}

Dataset gen_sine(int n, int p, std::uint64_t seed, const SineParams& params) {
  if (p < 2) throw ArgumentError("gen_sine requires p >= 2, got " + std::to_string(p));
  if (n < 2) throw ArgumentError("gen_sine requires n >= 2");
  Rng rng(seed);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i) {
    const double x1 = std::numbers::pi * (2.0 * uniform01(rng) - 1.0);
    m(i, 0) = x1;
    m(i, 1) = std::sin(x1) + params.noise_sd * standard_normal(rng);
  }
  fill_noise(m, 2, rng);
  std::ostringstream prov;
  prov << "sine(n=" << n << ",p=" << p << ",noise_sd=" << format_double(params.noise_sd)
       << ",seed=" << seed << ")";
  Dataset x = make_dataset(std::move(m), prov.str());
  return params.standardize ? standardize(x) : x;
}

Dataset gen_trimodal(int n, std::uint64_t seed, std::vector<int>* labels) {
  if (n < 3) throw ArgumentError("gen_trimodal requires n >= 3");
  static constexpr double kMeans[3][2] = {{-3.0, 0.0}, {3.0, 0.0}, {0.0, 5.0}};
  Rng rng(seed);
  Eigen::MatrixXd m(n, 2);
  if (labels) labels->assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const int k = i % 3;
    m(i, 0) = kMeans[k][0] + standard_normal(rng);
    m(i, 1) = kMeans[k][1] + standard_normal(rng);
    if (labels) (*labels)[static_cast<std::size_t>(i)] = k;
  }
  return standardize(
      make_dataset(std::move(m), "trimodal(n=" + std::to_string(n) + ",seed=" +
                                     std::to_string(seed) + ")"));
}

Dataset gen_randu(int n, std::uint32_t seed) {
  if (n < 1) throw ArgumentError("gen_randu requires n >= 1");
  Eigen::MatrixXd m(n, 3);
  std::uint32_t state = seed;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) {
      state = randu_next(state);
      m(i, j) = static_cast<double>(state) / 2147483648.0;
    }
  Dataset x{std::move(m), default_names(3),
            "randu(n=" + std::to_string(n) + ",seed=" + std::to_string(seed) + ")"};
  if (n < 2) return x;
  return standardize(x);
}

Dataset standardize(const Dataset& x) {
  const Eigen::Index n = x.n();
  if (n < 2) throw DegenerateInputError("standardize needs at least 2 rows");
  Dataset out = x;
  for (Eigen::Index j = 0; j < x.p(); ++j) {
    auto col = out.values.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    // Second centering pass removes the rounding left by the first.
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
    const double scale = std::max(std::abs(mean), 1.0);
    if (!(sd > 1e-12 * scale))
      throw DegenerateInputError("standardize: column '" + x.names[static_cast<std::size_t>(j)] +
                                 "' (" + std::to_string(j + 1) + ") has zero variance");
    col /= sd;
  }
  return out;
}

Dataset sphere(const Dataset& x) {
  Dataset out = x;
  const Eigen::RowVectorXd mean = x.values.colwise().mean();
  out.values.rowwise() -= mean;
  const Eigen::MatrixXd cov =
      (out.values.transpose() * out.values) / static_cast<double>(x.n() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw DegenerateInputError("sphere: covariance matrix is singular");
  const Eigen::MatrixXd inv_sqrt = eig.eigenvectors() *
                                   eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                   eig.eigenvectors().transpose();
  out.values = out.values * inv_sqrt;
  out.provenance += "+sphere";
  return out;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty");
  Dataset x;
  x.names = split_fields(line);
  const std::size_t p = x.names.size();

  std::vector<double> cells;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != p)
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(p) +
                       " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < p; ++j) {
      const std::string& f = fields[j];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(j + 1) +
                         ": '" + f + "' is not a finite number");
      cells.push_back(v);
    }
  }
  x.values.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t j = 0; j < p; ++j)
      x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * p + j];
  x.provenance = "csv(" + path.string() + ")";
  x.validate();
  return x;
}

void save_csv(const Dataset& x, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t j = 0; j < x.names.size(); ++j) out << (j ? "," : "") << x.names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    for (Eigen::Index j = 0; j < x.p(); ++j) out << (j ? "," : "") << format_double(x.values(i, j));
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace pursuit
