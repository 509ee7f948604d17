#pragma once

#include "stfm/factor.hpp"
#include "stfm/sieve.hpp"

#include <variant>

namespace stfm {

/// vec(Z_t) = Phi vec(Z_{t-1}) + u_t, column-major vec.
struct VarModel {
  Matrix Phi;             // dr x dr
  Matrix innovation_cov;  // dr x dr
  Eigen::Index d = 0;
  Eigen::Index r = 0;
};

/// Z_t = PhiR Z_{t-1} PhiC + U_t with ||PhiR||_F = 1.
struct MarModel {
  Matrix PhiR;  // d x d
  Matrix PhiC;  // r x r
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> history;  // objective after every sweep, history[0] at the initial guess

  /// PhiC' (x) PhiR, the VAR coefficient this pair encodes.
  Matrix kronecker() const;
};

using TemporalModel = std::variant<VarModel, MarModel>;

struct MarOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200;
};

/// Column-major vec and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// QB Z_t' qa(s0), length p.
Vector predict_site(const FactorFit& fit, const SieveFit& sieve, Coord s0, std::size_t t);

/// predict_site for every query site; n_query x p.
Matrix predict_sites(const FactorFit& fit, const SieveFit& sieve, const SiteSet& sites,
                     std::size_t t);

VarModel fit_var1(const FactorSeries& Z);
MarModel fit_mar1(const FactorSeries& Z, const MarOptions& options = {});

Matrix forecast_factor(const VarModel& model, const Matrix& ZT, int h);
Matrix forecast_factor(const MarModel& model, const Matrix& ZT, int h);
Matrix forecast_factor(const TemporalModel& model, const Matrix& ZT, int h);

/// h-step forecast of the signal at each query site, from the last fitted Z; n_query x p.
Matrix predict_future(const FactorFit& fit, const SieveFit& sieve, const TemporalModel& model,
                      const SiteSet& sites, int h);

/// Model-implied lag-h cross-covariance of the signal between sites u and v; p x p.
/// Negative lags are accepted: the result at (u, v, -h) is the transpose of (v, u, h).
Matrix reconstruct_covariance(const FactorFit& fit, const SieveFit& sieve, Coord u, Coord v,
                              int h);

}  // namespace stfm
