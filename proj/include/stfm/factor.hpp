#pragma once

#include "stfm/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

namespace stfm {

enum class PartitionStrategy { Interleave, Random };

/// Split of the n sites into two halves of equal size m = floor(n/2).
///
/// For odd n one index is set aside. It is left out of the variable-space aggregate, but the
/// spatial estimation appends it to the first half so every site keeps a signal row.
struct Partition {
  std::vector<std::size_t> idx1;
  std::vector<std::size_t> idx2;
  std::optional<std::size_t> dropped;
  std::uint64_t seed = 0;
  PartitionStrategy strategy = PartitionStrategy::Interleave;

  std::size_t n() const { return idx1.size() + idx2.size() + (dropped ? 1 : 0); }

  /// Sites of the first spatial half: idx1 plus the dropped site, ascending.
  std::vector<std::size_t> spatial_half1() const;
  const std::vector<std::size_t>& spatial_half2() const { return idx2; }
};

Partition partition_sites(std::size_t n, PartitionStrategy strategy, std::uint64_t seed);

/// Orthonormal basis of an estimated column space plus the full spectrum it was cut from.
struct LoadingSpace {
  Matrix Q;
  Vector eigenvalues;  // descending, length = dimension of the decomposed matrix

  Eigen::Index rank() const { return Q.cols(); }
};

/// The latent matrix series Z_t, each d x r.
struct FactorSeries {
  Slices z;

  std::size_t T() const { return z.size(); }
  Eigen::Index d() const { return z.empty() ? 0 : z[0].rows(); }
  Eigen::Index r() const { return z.empty() ? 0 : z[0].cols(); }
};

enum class RankMethod { EigenRatio, Scree };

struct RankSelection {
  std::size_t d_hat = 0;
  std::size_t r_hat = 0;
  RankMethod method = RankMethod::EigenRatio;
  std::size_t k_max = 0;          // variable side; the spatial side uses k_max_spatial
  std::size_t k_max_spatial = 0;
  double threshold = 0.0;         // scree only
  bool fixed = false;
};

struct RankOptions {
  std::optional<std::pair<std::size_t, std::size_t>> fixed;  // (d, r)
  RankMethod method = RankMethod::EigenRatio;
  std::size_t k_max_spatial = 0;   // 0: ceil(n_half / 2)
  std::size_t k_max_variable = 0;  // 0: ceil(p / 2)
  double threshold = 0.9;
};

struct FitOptions {
  RankOptions ranks;
  PartitionStrategy strategy = PartitionStrategy::Random;
  std::uint64_t seed = 0;
  bool center = true;
};

struct FactorFit {
  LoadingSpace QA;   // n x d, re-estimated on all sites
  LoadingSpace QB;   // p x r
  LoadingSpace QA1;  // first-stage, rows = partition.spatial_half1()
  LoadingSpace QA2;  // first-stage, rows = partition.idx2
  FactorSeries Z;
  Partition partition;
  RankSelection ranks;
  Matrix center;     // n x p temporal means removed before the covariance aggregates
  std::map<std::string, Vector> spectra;  // "MA1", "MA2", "MB", "MA"

  std::size_t n() const { return static_cast<std::size_t>(QA.Q.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(QB.Q.rows()); }
  std::size_t T() const { return Z.T(); }
  std::size_t d() const { return static_cast<std::size_t>(QA.Q.cols()); }
  std::size_t r() const { return static_cast<std::size_t>(QB.Q.cols()); }

  /// Q_A Z_t Q_B', the rank-(d, r) signal at the fitted sites.
  Matrix signal(std::size_t t) const;
};

struct SpatialAggregates {
  Matrix MA1;  // n1 x n1 over partition.spatial_half1()
  Matrix MA2;  // n2 x n2 over partition.idx2
};

/// Spatial cross-covariance aggregates between the two halves. Expects centered data.
SpatialAggregates spatial_aggregates(const STDataTensor& data, const Partition& partition);

/// Variable-space aggregate over the truncated halves idx1 / idx2. Expects centered data.
Matrix variable_aggregate(const STDataTensor& data, const Partition& partition);

/// Leading k eigenvectors of (M + M')/2; each column's largest-magnitude entry is positive.
LoadingSpace top_eigenvectors(const Matrix& M, Eigen::Index k);

/// argmax_{1<=j<=k_max} lambda_j / lambda_{j+1}, eigenvalues floored at 1e-12 * max(lambda_1, 1).
std::size_t select_rank_eigenratio(std::span<const double> eigenvalues, std::size_t k_max);

/// Smallest k whose leading eigenvalues explain at least `threshold` of the total.
std::size_t select_rank_scree(std::span<const double> eigenvalues, double threshold);

/// First-stage signals: each half is projected onto its own spatial space and onto QB, then the
/// rows are put back into site order.
SignalTensor estimate_signals(const STDataTensor& data, const LoadingSpace& QA1,
                              const LoadingSpace& QA2, const LoadingSpace& QB,
                              const Partition& partition);

/// Second stage: Psi_t = Xi_t QB, QA from the leading eigenvectors of (1/T) sum Psi_t Psi_t',
/// and Z_t = QA' Psi_t.
std::pair<LoadingSpace, FactorSeries> reestimate_QA(const SignalTensor& signals,
                                                    const LoadingSpace& QB, std::size_t d);

FactorFit fit(const STDataTensor& data, const FitOptions& options);

/// Temporal mean of every (site, variable) series, n x p.
Matrix temporal_mean(const Slices& y);

}  // namespace stfm
