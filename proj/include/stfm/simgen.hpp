#pragma once

#include "stfm/types.hpp"

#include <array>
#include <cstdint>

namespace stfm {

struct SimConfig {
  std::size_t n = 400;
  std::size_t p = 40;
  std::size_t T = 240;
  double gamma = 0.0;
  std::uint64_t seed = 1;
  std::size_t burn_in = 200;
  std::size_t new_sites = 50;
  std::size_t horizon = 2;      // future steps kept as ground truth for temporal forecasts
  double signal_scale = 1.0;    // multiplies B
  double noise_scale = 1.0;     // multiplies the nugget variance

  void validate() const;
};

struct SimGroundTruth {
  Matrix A;                 // n x 3, a_j(s_i)
  Matrix B;                 // p x 2
  Matrix PhiR;              // 3 x 3
  Matrix PhiC;              // 2 x 2
  Slices X;                 // T slices, 3 x 2
  SignalTensor Xi;          // A X_t B'
  SiteSet new_sites;
  Matrix A_new;             // new_sites x 3
  Slices new_site_truth;    // T slices, new_sites x p
  Slices future_X;          // horizon slices, X_{T+1}, ...
  Slices future_Xi;         // horizon slices at the fitted sites, n x p
};

struct SimOutput {
  STDataTensor data;
  SimGroundTruth truth;
};

struct SnrEstimate {
  double snr = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// (a1(s), a2(s), a3(s)).
std::array<double, 3> true_loading_functions(Coord s);

/// Nugget variance at s before noise_scale.
double nugget_variance(Coord s);

SimOutput generate(const SimConfig& config);

/// Stationary covariance of vec(X_t) under the simulation dynamics with identity innovations.
Matrix stationary_factor_covariance(const Matrix& PhiR, const Matrix& PhiC);

/// Ratio of the site-integrated signal and noise traces, by uniform Monte Carlo over sites.
/// Uses the same B draw as generate() for this config.
SnrEstimate snr_montecarlo(const SimConfig& config, std::size_t draws);

}  // namespace stfm
