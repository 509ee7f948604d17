#pragma once

#include "stfm/factor.hpp"
#include "stfm/simgen.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stfm {

struct GridCell {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t T = 0;
  double gamma = 0.0;
};

struct ExperimentConfig {
  std::vector<std::size_t> n{400};
  std::vector<std::size_t> p{40};
  std::vector<std::size_t> T{240};
  std::vector<double> gamma{0.0};
  std::size_t replicates = 20;
  std::uint64_t seed = 1;
  std::optional<std::pair<std::size_t, std::size_t>> ranks;  // empty: estimate
  std::string outputs = "out";

  /// Cells in T, p, n, gamma order (outermost first).
  std::vector<GridCell> cells() const;
  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

inline constexpr std::size_t kHorizons = 2;

struct ReplicateResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t d_hat = 0;
  std::size_t r_hat = 0;
  double D_A1 = 0.0;
  double D_A2 = 0.0;
  double D_A = 0.0;   // re-estimated spatial space
  double D_B = 0.0;
  double mse_first = 0.0;   // first-stage signals
  double mse_second = 0.0;  // Q_A Z_t Q_B'
  std::optional<double> mspe_spatial;
  std::array<std::optional<double>, kHorizons> mspe_var{};
  std::array<std::optional<double>, kHorizons> mspe_mar{};
};

struct ReplicateOptions {
  std::optional<std::pair<std::size_t, std::size_t>> ranks;
  bool predictions = true;  // sieve kriging and temporal forecasts
};

/// Seed of replicate `index` in `cell`; independent of grid order and worker count.
std::uint64_t replicate_seed(std::uint64_t seed, const GridCell& cell, std::size_t index);

/// One simulated data set, fitted and scored.
ReplicateResult run_replicate(const GridCell& cell, std::uint64_t seed, const ReplicateOptions& options);

/// Replicates 0..count-1 of one cell, in index order, on `jobs` workers (0: OpenMP default).
std::vector<ReplicateResult> run_cell(const GridCell& cell, std::size_t count, std::uint64_t seed,
                                      const ReplicateOptions& options, int jobs);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Mean and sample standard deviation of the present values, summed in index order.
Summary summarize(const std::vector<std::optional<double>>& values);

/// Relative frequency of every observed (d_hat, r_hat) among the successful replicates.
std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> rank_frequencies(
    const std::vector<ReplicateResult>& results);

double rank_frequency(const std::vector<ReplicateResult>& results, std::size_t d, std::size_t r);

}  // namespace stfm
