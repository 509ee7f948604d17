#include "stfm/factor.hpp"

#include "stfm/error.hpp"
#include "stfm/kernels.hpp"
#include "stfm/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stfm {

namespace {

using Index = Eigen::Index;

std::size_t half_ceil(std::size_t k) { return (k + 1) / 2; }

// Eigen-ratio with k_max clamped to what the spectrum supports.
std::size_t auto_ratio_rank(const Vector& eigenvalues, std::size_t requested, std::size_t dim) {
  const std::size_t len = static_cast<std::size_t>(eigenvalues.size());
  if (len < 2) return 1;
  std::size_t k_max = requested == 0 ? half_ceil(dim) : requested;
  k_max = std::clamp<std::size_t>(k_max, 1, len - 1);
  return select_rank_eigenratio(std::span<const double>(eigenvalues.data(), len), k_max);
}

void require_signal(const Vector& eigenvalues, const char* name) {
  if (eigenvalues.size() == 0 || !(eigenvalues(0) > 0.0)) {
    throw Error(ErrorKind::DegenerateSpectrum, std::string(name) + " has no positive eigenvalue");
  }
}

}  // namespace

std::vector<std::size_t> Partition::spatial_half1() const {
  std::vector<std::size_t> half = idx1;
  if (dropped) {
    half.insert(std::upper_bound(half.begin(), half.end(), *dropped), *dropped);
  }
  return half;
}

Partition partition_sites(std::size_t n, PartitionStrategy strategy, std::uint64_t seed) {
  if (n < 4) {
    throw Error(ErrorKind::TooFewSites, "partition needs at least 4 sites, got " + std::to_string(n));
  }
  Partition part;
  part.seed = seed;
  part.strategy = strategy;
  const std::size_t m = n / 2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (strategy == PartitionStrategy::Interleave) {
    for (std::size_t k = 0; k < m; ++k) {
      part.idx1.push_back(2 * k);
      part.idx2.push_back(2 * k + 1);
    }
    if (n % 2 == 1) part.dropped = n - 1;
    return part;
  }

  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_index(rng, i + 1)]);
  }
  part.idx1.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  part.idx2.assign(order.begin() + static_cast<std::ptrdiff_t>(m),
                   order.begin() + static_cast<std::ptrdiff_t>(2 * m));
  std::sort(part.idx1.begin(), part.idx1.end());
  std::sort(part.idx2.begin(), part.idx2.end());
  if (n % 2 == 1) part.dropped = order[n - 1];
  return part;
}

Matrix temporal_mean(const Slices& y) {
  if (y.empty()) return Matrix();
  Matrix mean = Matrix::Zero(y[0].rows(), y[0].cols());
  for (const auto& slice : y) mean += slice;
  return mean / static_cast<double>(y.size());
}

Matrix FactorFit::signal(std::size_t t) const {
  if (t >= Z.T()) throw Error(ErrorKind::IndexOutOfRange, "time index " + std::to_string(t));
  return QA.Q * Z.z[t] * QB.Q.transpose();
}

SpatialAggregates spatial_aggregates(const STDataTensor& data, const Partition& partition) {
  if (partition.n() != data.n()) {
    throw Error(ErrorKind::InvalidPartition, "partition covers " + std::to_string(partition.n()) +
                                                 " sites, data has " + std::to_string(data.n()));
  }
  const auto half1 = partition.spatial_half1();
  if (half1.empty() || partition.idx2.empty()) {
    throw Error(ErrorKind::InvalidPartition, "partition half is empty");
  }
  const Slices y1 = kernels::take_rows(data.slices(), half1);
  const Slices y2 = kernels::take_rows(data.slices(), partition.idx2);
  return {kernels::cross_row_aggregate(y1, y2), kernels::cross_row_aggregate(y2, y1)};
}

Matrix variable_aggregate(const STDataTensor& data, const Partition& partition) {
  if (partition.n() != data.n()) {
    throw Error(ErrorKind::InvalidPartition, "partition covers " + std::to_string(partition.n()) +
                                                 " sites, data has " + std::to_string(data.n()));
  }
  if (partition.idx1.empty() || partition.idx1.size() != partition.idx2.size()) {
    throw Error(ErrorKind::InvalidPartition, "variable aggregate needs two equal, nonempty halves");
  }
  const Slices y1 = kernels::take_rows(data.slices(), partition.idx1);
  const Slices y2 = kernels::take_rows(data.slices(), partition.idx2);
  return kernels::cross_col_aggregate(y1, y2);
}

LoadingSpace top_eigenvectors(const Matrix& M, Index k) {
  if (M.rows() != M.cols()) throw Error(ErrorKind::ShapeError, "matrix is not square");
  if (k < 0 || k > M.rows()) {
    throw Error(ErrorKind::RankTooLarge, "requested " + std::to_string(k) +
                                             " eigenvectors of a " + std::to_string(M.rows()) +
                                             "-dimensional matrix");
  }
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularInput, "symmetric eigen-decomposition did not converge");
  }
  // Eigen returns ascending order.
  const Index dim = M.rows();
  LoadingSpace out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.Q = solver.eigenvectors().rightCols(k).rowwise().reverse();
  for (Index j = 0; j < k; ++j) {
    Index arg = 0;
    for (Index i = 1; i < dim; ++i) {
      if (std::abs(out.Q(i, j)) > std::abs(out.Q(arg, j))) arg = i;
    }
    if (out.Q(arg, j) < 0.0) out.Q.col(j) *= -1.0;
  }
  return out;
}

std::size_t select_rank_eigenratio(std::span<const double> eigenvalues, std::size_t k_max) {
  if (k_max < 1) throw Error(ErrorKind::InvalidArgument, "k_max must be at least 1");
  if (eigenvalues.size() < k_max + 1) {
    throw Error(ErrorKind::InvalidArgument, "eigen-ratio with k_max = " + std::to_string(k_max) +
                                                " needs " + std::to_string(k_max + 1) +
                                                " eigenvalues, got " +
                                                std::to_string(eigenvalues.size()));
  }
  const double floor = 1e-12 * std::max(eigenvalues[0], 1.0);
  auto at = [&](std::size_t j) { return std::max(eigenvalues[j], floor); };
  std::size_t best = 1;
  double best_ratio = -1.0;
  for (std::size_t j = 1; j <= k_max; ++j) {
    const double ratio = at(j - 1) / at(j);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = j;
    }
  }
  return best;
}

std::size_t select_rank_scree(std::span<const double> eigenvalues, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "scree threshold must lie in (0, 1]");
  }
  double total = 0.0;
  for (double v : eigenvalues) total += std::max(v, 0.0);
  if (!(total > 0.0)) throw Error(ErrorKind::DegenerateSpectrum, "spectrum is identically zero");
  double running = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    running += std::max(eigenvalues[k], 0.0);
    // Relative slack keeps exact fractions like 3/4 from failing on rounding.
    if (running >= threshold * total * (1.0 - 1e-12)) return k + 1;
  }
  return eigenvalues.size();
}

SignalTensor estimate_signals(const STDataTensor& data, const LoadingSpace& QA1,
                              const LoadingSpace& QA2, const LoadingSpace& QB,
                              const Partition& partition) {
  const auto half1 = partition.spatial_half1();
  const auto& half2 = partition.idx2;
  if (partition.n() != data.n() || QA1.Q.rows() != static_cast<Index>(half1.size()) ||
      QA2.Q.rows() != static_cast<Index>(half2.size()) ||
      QB.Q.rows() != static_cast<Index>(data.p()) || QA1.Q.cols() != QA2.Q.cols()) {
    throw Error(ErrorKind::ShapeError, "loading spaces do not match the data and partition");
  }
  const Matrix& qb = QB.Q;
  const Index n = static_cast<Index>(data.n());
  const Index p = static_cast<Index>(data.p());

  Slices out(data.T());
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < static_cast<Index>(data.T()); ++t) {
    const Matrix& y = data[static_cast<std::size_t>(t)];
    Matrix xi(n, p);
    auto project_half = [&](const std::vector<std::size_t>& rows, const Matrix& qa) {
      Matrix part(static_cast<Index>(rows.size()), p);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        part.row(static_cast<Index>(k)) = y.row(static_cast<Index>(rows[k]));
      }
      const Matrix core = qa.transpose() * part * qb;
      const Matrix proj = qa * core * qb.transpose();
      for (std::size_t k = 0; k < rows.size(); ++k) {
        xi.row(static_cast<Index>(rows[k])) = proj.row(static_cast<Index>(k));
      }
    };
    project_half(half1, QA1.Q);
    project_half(half2, QA2.Q);
    out[static_cast<std::size_t>(t)] = std::move(xi);
  }
  return data.with_slices(std::move(out));
}

std::pair<LoadingSpace, FactorSeries> reestimate_QA(const SignalTensor& signals,
                                                    const LoadingSpace& QB, std::size_t d) {
  if (QB.Q.rows() != static_cast<Index>(signals.p())) {
    throw Error(ErrorKind::ShapeError, "QB rows do not match the variable count");
  }
  if (d > signals.n()) {
    throw Error(ErrorKind::RankTooLarge, "d = " + std::to_string(d) + " exceeds n = " +
                                             std::to_string(signals.n()));
  }
  Slices psi;
  psi.reserve(signals.T());
  for (const auto& xi : signals.slices()) psi.push_back(xi * QB.Q);

  LoadingSpace qa = top_eigenvectors(kernels::second_moment(psi), static_cast<Index>(d));
  FactorSeries z;
  z.z.reserve(psi.size());
  for (const auto& ps : psi) z.z.push_back(qa.Q.transpose() * ps);
  return {std::move(qa), std::move(z)};
}

FactorFit fit(const STDataTensor& data, const FitOptions& options) {
  if (data.n() < 4) {
    throw Error(ErrorKind::TooFewSites, "fit needs n >= 4, got " + std::to_string(data.n()));
  }
  if (data.T() < 2) throw Error(ErrorKind::SeriesTooShort, "fit needs T >= 2");

  FactorFit out;
  out.partition = partition_sites(data.n(), options.strategy, options.seed);
  out.center = options.center ? temporal_mean(data.slices())
                              : Matrix::Zero(static_cast<Index>(data.n()),
                                             static_cast<Index>(data.p()));

  Slices centered;
  centered.reserve(data.T());
  for (const auto& y : data.slices()) centered.push_back(y - out.center);
  const STDataTensor centered_data = data.with_slices(std::move(centered));

  const auto aggregates = spatial_aggregates(centered_data, out.partition);
  const Matrix mb = variable_aggregate(centered_data, out.partition);

  // Full spectra first; the eigenvectors are cut once the ranks are known.
  const LoadingSpace full1 = top_eigenvectors(aggregates.MA1, aggregates.MA1.rows());
  const LoadingSpace full2 = top_eigenvectors(aggregates.MA2, aggregates.MA2.rows());
  const LoadingSpace fullb = top_eigenvectors(mb, mb.rows());
  require_signal(full1.eigenvalues, "MA1");
  require_signal(full2.eigenvalues, "MA2");
  require_signal(fullb.eigenvalues, "MB");

  const std::size_t n1 = static_cast<std::size_t>(aggregates.MA1.rows());
  const std::size_t n2 = static_cast<std::size_t>(aggregates.MA2.rows());
  const std::size_t p = data.p();
  RankSelection& ranks = out.ranks;
  ranks.method = options.ranks.method;
  ranks.threshold = options.ranks.method == RankMethod::Scree ? options.ranks.threshold : 0.0;
  if (options.ranks.fixed) {
    ranks.fixed = true;
    std::tie(ranks.d_hat, ranks.r_hat) = *options.ranks.fixed;
  } else if (options.ranks.method == RankMethod::EigenRatio) {
    const std::size_t d1 = auto_ratio_rank(full1.eigenvalues, options.ranks.k_max_spatial, n1);
    const std::size_t d2 = auto_ratio_rank(full2.eigenvalues, options.ranks.k_max_spatial, n2);
    ranks.d_hat = std::max(d1, d2);
    ranks.r_hat = auto_ratio_rank(fullb.eigenvalues, options.ranks.k_max_variable, p);
    ranks.k_max_spatial =
        options.ranks.k_max_spatial == 0 ? half_ceil(std::min(n1, n2)) : options.ranks.k_max_spatial;
    ranks.k_max = options.ranks.k_max_variable == 0 ? half_ceil(p) : options.ranks.k_max_variable;
  } else {
    auto scree = [&](const Vector& ev) {
      return select_rank_scree(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())),
                               options.ranks.threshold);
    };
    ranks.d_hat = std::max(scree(full1.eigenvalues), scree(full2.eigenvalues));
    ranks.r_hat = scree(fullb.eigenvalues);
  }
  if (ranks.d_hat == 0 || ranks.r_hat == 0) {
    throw Error(ErrorKind::DegenerateSpectrum, "rank selection returned zero");
  }
  if (ranks.d_hat > std::min(n1, n2) || ranks.r_hat > p) {
    throw Error(ErrorKind::RankTooLarge,
                "ranks (" + std::to_string(ranks.d_hat) + ", " + std::to_string(ranks.r_hat) +
                    ") exceed the half sizes (" + std::to_string(std::min(n1, n2)) + ") or p (" +
                    std::to_string(p) + ")");
  }

  auto cut = [](const LoadingSpace& full, std::size_t k) {
    return LoadingSpace{full.Q.leftCols(static_cast<Index>(k)), full.eigenvalues};
  };
  out.QA1 = cut(full1, ranks.d_hat);
  out.QA2 = cut(full2, ranks.d_hat);
  out.QB = cut(fullb, ranks.r_hat);

  // Signals and the second stage use the data as given; the centering only feeds the
  // aggregates, so the projected temporal mean stays part of the signal estimate.
  const SignalTensor first_stage = estimate_signals(data, out.QA1, out.QA2, out.QB, out.partition);
  auto [qa, z] = reestimate_QA(first_stage, out.QB, ranks.d_hat);
  out.QA = std::move(qa);
  out.Z = std::move(z);

  out.spectra["MA1"] = out.QA1.eigenvalues;
  out.spectra["MA2"] = out.QA2.eigenvalues;
  out.spectra["MB"] = out.QB.eigenvalues;
  out.spectra["MA"] = out.QA.eigenvalues;
  return out;
}

}  // namespace stfm
