#pragma once

// Synthetic data generators, standardization and CSV persistence.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pursuit {

/// n x p data matrix plus column names and a human-readable provenance
/// string (generator name with parameters, or source file path).
struct Dataset {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::string provenance;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }

  /// Throws ArgumentError unless n >= 2, all entries finite and the name
  /// count matches p.
  void validate() const;
};

/// Builds a validated dataset with default column names V1..Vp.
Dataset make_dataset(Eigen::MatrixXd values, std::string provenance);

struct PipeParams {
  double radius_sd = 0.05;
  bool standardize = true;
};

struct SineParams {
  double noise_sd = 0.1;
  bool standardize = true;
};

/// Noisy unit circle in columns 1-2, N(0,1) noise in the rest.
Dataset gen_pipe(int n, int p, std::uint64_t seed, const PipeParams& params = {});

/// x1 ~ U(-pi, pi), x2 = sin(x1) + noise, N(0,1) noise in the rest.
Dataset gen_sine(int n, int p, std::uint64_t seed, const SineParams& params = {});

/// Equal-weight mixture of unit-covariance Gaussians centered at
/// (-3,0), (3,0), (0,5); standardized. Component labels go to `labels` when
/// non-null.
Dataset gen_trimodal(int n, std::uint64_t seed, std::vector<int>* labels = nullptr);

/// Consecutive triples of the RANDU generator x <- 65539 x mod 2^31,
/// started from `seed` (odd), scaled to [0,1) then standardized.
Dataset gen_randu(int n, std::uint32_t seed = 1);

/// One RANDU step.
constexpr std::uint32_t randu_next(std::uint32_t state) {
  return static_cast<std::uint32_t>((65539ULL * state) % 2147483648ULL);
}

/// Centers each column and scales to unit sample sd (n - 1 denominator).
/// Throws DegenerateInputError naming the first zero-variance column.
Dataset standardize(const Dataset& x);

/// ZCA whitening: centered data times Cov^{-1/2}.
Dataset sphere(const Dataset& x);

Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& x, const std::filesystem::path& path);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace pursuit
