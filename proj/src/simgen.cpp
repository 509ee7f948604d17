#include "stfm/simgen.hpp"

#include "stfm/error.hpp"
#include "stfm/rng.hpp"

#include <cmath>
#include <numbers>

namespace stfm {

namespace {

using Index = Eigen::Index;

enum Stream : std::uint64_t { kSites = 1, kNewSites, kLoadingB, kFactor, kNoise, kSnrSites };

std::vector<Coord> uniform_sites(std::size_t count, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Coord> out(count);
  for (auto& c : out) {
    c.x = u(rng);
    c.y = u(rng);
  }
  return out;
}

Matrix loading_matrix(const std::vector<Coord>& coords) {
  Matrix A(static_cast<Index>(coords.size()), 3);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto a = true_loading_functions(coords[i]);
    A.row(static_cast<Index>(i)) << a[0], a[1], a[2];
  }
  return A;
}

Matrix draw_B(const SimConfig& config) {
  Rng rng(derive_seed(config.seed, kLoadingB));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double strength = std::pow(static_cast<double>(config.p), -config.gamma / 2.0);
  Matrix B(static_cast<Index>(config.p), 2);
  for (Index i = 0; i < B.rows(); ++i) {
    for (Index j = 0; j < 2; ++j) B(i, j) = u(rng) * strength * config.signal_scale;
  }
  return B;
}

Matrix phi_r() { return Vector::Map(std::array{0.7, 0.8, 0.9}.data(), 3).asDiagonal(); }
Matrix phi_c() { return Vector::Map(std::array{0.8, 0.6}.data(), 2).asDiagonal(); }

}  // namespace

void SimConfig::validate() const {
  if (n < 4) throw Error(ErrorKind::ConfigError, "n must be >= 4");
  if (p < 1) throw Error(ErrorKind::ConfigError, "p must be >= 1");
  if (T < 2) throw Error(ErrorKind::ConfigError, "T must be >= 2");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorKind::ConfigError, "gamma must lie in [0, 1]");
  if (!(noise_scale >= 0.0) || !std::isfinite(signal_scale)) {
    throw Error(ErrorKind::ConfigError, "scales must be finite and the noise scale nonnegative");
  }
}

std::array<double, 3> true_loading_functions(Coord s) {
  return {(s.x - s.y) / 2.0,
          std::cos(std::numbers::pi * std::sqrt(2.0 * (s.x * s.x + s.y * s.y))),
          1.5 * s.x * s.y};
}

double nugget_variance(Coord s) {
  return (1.0 + s.x * s.x + s.y * s.y) / (2.0 * std::sqrt(3.0));
}

SimOutput generate(const SimConfig& config) {
  config.validate();
  SimOutput out;
  SimGroundTruth& g = out.truth;

  Rng site_rng(derive_seed(config.seed, kSites));
  const auto coords = uniform_sites(config.n, site_rng);
  const SiteSet sites = SiteSet::from_coords(coords, "s");
  Rng new_rng(derive_seed(config.seed, kNewSites));
  const auto new_coords = uniform_sites(config.new_sites, new_rng);
  g.new_sites = SiteSet::from_coords(new_coords, "new");

  g.A = loading_matrix(coords);
  g.A_new = loading_matrix(new_coords);
  g.B = draw_B(config);
  g.PhiR = phi_r();
  g.PhiC = phi_c();

  Rng factor_rng(derive_seed(config.seed, kFactor));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x = Matrix::Zero(3, 2);
  auto step = [&] {
    Matrix u(3, 2);
    for (Index j = 0; j < 2; ++j) {
      for (Index i = 0; i < 3; ++i) u(i, j) = normal(factor_rng);
    }
    x = g.PhiR * x * g.PhiC + u;
  };
  for (std::size_t t = 0; t < config.burn_in; ++t) step();
  g.X.reserve(config.T);
  for (std::size_t t = 0; t < config.T; ++t) {
    step();
    g.X.push_back(x);
  }
  for (std::size_t h = 0; h < config.horizon; ++h) {
    step();
    g.future_X.push_back(x);
  }

  const Matrix Bt = g.B.transpose();
  Slices xi(config.T);
  g.new_site_truth.resize(config.T);
  for (std::size_t t = 0; t < config.T; ++t) {
    const Matrix xb = g.X[t] * Bt;  // 3 x p
    xi[t] = g.A * xb;
    g.new_site_truth[t] = g.A_new * xb;
  }
  for (const auto& fx : g.future_X) g.future_Xi.push_back(g.A * fx * Bt);

  Vector sd(static_cast<Index>(config.n));
  for (std::size_t i = 0; i < config.n; ++i) {
    sd(static_cast<Index>(i)) = std::sqrt(nugget_variance(coords[i]) * config.noise_scale);
  }
  Rng noise_rng(derive_seed(config.seed, kNoise));
  Slices y(config.T);
  for (std::size_t t = 0; t < config.T; ++t) {
    y[t] = xi[t];
    for (Index j = 0; j < y[t].cols(); ++j) {
      for (Index i = 0; i < y[t].rows(); ++i) y[t](i, j) += sd(i) * normal(noise_rng);
    }
  }

  g.Xi = SignalTensor::from_slices(std::move(xi), sites);
  out.data = STDataTensor::from_slices(std::move(y), sites);
  return out;
}

Matrix stationary_factor_covariance(const Matrix& PhiR, const Matrix& PhiC) {
  const Index k = PhiR.rows() * PhiC.rows();
  Matrix K(k, k);
  // K = PhiC' (x) PhiR
  for (Index a = 0; a < PhiC.rows(); ++a) {
    for (Index b = 0; b < PhiC.cols(); ++b) {
      K.block(a * PhiR.rows(), b * PhiR.cols(), PhiR.rows(), PhiR.cols()) = PhiC(b, a) * PhiR;
    }
  }
  Matrix KK(k * k, k * k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) KK.block(a * k, b * k, k, k) = K(a, b) * K;
  }
  const Matrix lhs = Matrix::Identity(k * k, k * k) - KK;
  const Matrix eye = Matrix::Identity(k, k);
  const Vector sol = lhs.partialPivLu().solve(Vector::Map(eye.data(), k * k));
  return Matrix::Map(sol.data(), k, k);
}

SnrEstimate snr_montecarlo(const SimConfig& config, std::size_t draws) {
  config.validate();
  if (draws < 1000) throw Error(ErrorKind::InvalidArgument, "need at least 1000 draws");
  const Matrix B = draw_B(config);
  const Matrix sigma = stationary_factor_covariance(phi_r(), phi_c());  // cov vec(X), 6 x 6
  // tr cov(B X' a) = tr((B'B (x) a a') Sigma) with vec(a' X B') = (B (x) a') vec(X).
  const Matrix BtB = B.transpose() * B;

  Rng rng(derive_seed(config.seed, kSnrSites));
  const auto coords = uniform_sites(draws, rng);
  Vector num(static_cast<Index>(draws));
  Vector den(static_cast<Index>(draws));
  for (std::size_t k = 0; k < draws; ++k) {
    const auto a3 = true_loading_functions(coords[k]);
    const Eigen::Vector3d a(a3[0], a3[1], a3[2]);
    const Matrix aa = a * a.transpose();
    double tr = 0.0;
    for (Index c1 = 0; c1 < 2; ++c1) {
      for (Index c2 = 0; c2 < 2; ++c2) {
        tr += BtB(c1, c2) * (aa.cwiseProduct(sigma.block(c1 * 3, c2 * 3, 3, 3))).sum();
      }
    }
    num(static_cast<Index>(k)) = tr;
    den(static_cast<Index>(k)) =
        static_cast<double>(config.p) * nugget_variance(coords[k]) * config.noise_scale;
  }
  SnrEstimate out;
  out.draws = draws;
  const double mden = den.mean();
  if (!(mden > 0.0)) throw Error(ErrorKind::InvalidArgument, "noise variance is zero");
  out.snr = num.mean() / mden;
  const Vector lin = num - out.snr * den;
  const double var = (lin.array() - lin.mean()).square().sum() / static_cast<double>(draws - 1);
  out.std_error = std::sqrt(var / static_cast<double>(draws)) / mden;
  return out;
}

}  // namespace stfm
