#include "stfm/forecast.hpp"

#include "stfm/error.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <cstdlib>
#include <limits>

namespace stfm {

namespace {

using Index = Eigen::Index;

Matrix ls_solve(const Matrix& design, const Matrix& rhs, const char* what) {
  const Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorKind::SingularDesign, std::string(what) + ": lagged design is rank deficient");
  }
  return qr.solve(rhs);
}

double mar_objective(const Slices& z, const Matrix& R, const Matrix& C) {
  double total = 0.0;
  for (std::size_t t = 1; t < z.size(); ++t) total += (z[t] - R * z[t - 1] * C).squaredNorm();
  return total;
}

// (R, C) minimizing ||Phi - C' (x) R||_F, from the leading singular pair of the rearranged Phi.
std::pair<Matrix, Matrix> nearest_kronecker(const Matrix& Phi, Index d, Index r) {
  Matrix re(r * r, d * d);
  for (Index l = 0; l < r; ++l) {
    for (Index j = 0; j < r; ++j) {
      const Matrix block = Phi.block(j * d, l * d, d, d);
      re.row(j + l * r) = Vector::Map(block.data(), d * d).transpose();
    }
  }
  const Eigen::JacobiSVD<Matrix> svd(re, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma = svd.singularValues()(0);
  const Vector u = svd.matrixU().col(0) * sigma;
  const Vector v = svd.matrixV().col(0);
  const Matrix Ct = Matrix::Map(u.data(), r, r);
  return {Matrix::Map(v.data(), d, d), Ct.transpose()};
}

Matrix matrix_power(const Matrix& m, int h) {
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  for (int k = 0; k < h; ++k) out = m * out;
  return out;
}

void require_horizon(int h) {
  if (h < 1) throw Error(ErrorKind::InvalidArgument, "forecast horizon must be >= 1");
}

}  // namespace

Matrix MarModel::kronecker() const { return Eigen::kroneckerProduct(PhiC.transpose(), PhiR).eval(); }

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw Error(ErrorKind::ShapeError, "unvec size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Vector predict_site(const FactorFit& fit, const SieveFit& sieve, Coord s0, std::size_t t) {
  if (t >= fit.T()) {
    throw Error(ErrorKind::IndexOutOfRange, "time index " + std::to_string(t) + " outside [0, " +
                                                std::to_string(fit.T()) + ")");
  }
  if (sieve.d() != static_cast<Index>(fit.d())) {
    throw Error(ErrorKind::ShapeError, "sieve and fit disagree on d");
  }
  const Vector qa = evaluate_loading(sieve, s0);
  return fit.QB.Q * (fit.Z.z[t].transpose() * qa);
}

Matrix predict_sites(const FactorFit& fit, const SieveFit& sieve, const SiteSet& sites,
                     std::size_t t) {
  if (t >= fit.T()) throw Error(ErrorKind::IndexOutOfRange, "time index out of range");
  if (sieve.d() != static_cast<Index>(fit.d())) {
    throw Error(ErrorKind::ShapeError, "sieve and fit disagree on d");
  }
  for (const auto& site : sites.sites()) {
    if (sieve.spec.family == BasisFamily::BSpline && !sieve.spec.domain.contains(site.at)) {
      throw Error(ErrorKind::OutOfDomain, "site " + site.id + " lies outside the basis domain");
    }
  }
  Matrix out(static_cast<Index>(sites.size()), static_cast<Index>(fit.p()));
  const Matrix loadings = fit.QB.Q * fit.Z.z[t].transpose();  // p x d
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < out.rows(); ++i) {
    out.row(i) = (loadings * evaluate_loading(sieve, sites[static_cast<std::size_t>(i)].at)).transpose();
  }
  return out;
}

VarModel fit_var1(const FactorSeries& Z) {
  const auto T = static_cast<Index>(Z.T());
  const Index d = Z.d();
  const Index r = Z.r();
  const Index k = d * r;
  if (T < k + 2) {
    throw Error(ErrorKind::Underdetermined, "VAR(1) needs T >= dr + 2, have T=" +
                                                std::to_string(T) + ", dr=" + std::to_string(k));
  }
  Matrix X(T - 1, k);
  Matrix Y(T - 1, k);
  for (Index t = 1; t < T; ++t) {
    X.row(t - 1) = vec(Z.z[static_cast<std::size_t>(t - 1)]).transpose();
    Y.row(t - 1) = vec(Z.z[static_cast<std::size_t>(t)]).transpose();
  }
  VarModel out;
  out.d = d;
  out.r = r;
  out.Phi = ls_solve(X, Y, "VAR(1)").transpose();
  const Matrix resid = Y - X * out.Phi.transpose();
  out.innovation_cov = resid.transpose() * resid / static_cast<double>(T - 1);
  return out;
}

MarModel fit_mar1(const FactorSeries& Z, const MarOptions& options) {
  const auto T = static_cast<Index>(Z.T());
  const Index d = Z.d();
  const Index r = Z.r();
  if (T < std::max(d, r) + 2) {
    throw Error(ErrorKind::Underdetermined, "MAR(1) needs T >= max(d, r) + 2");
  }
  const Slices& z = Z.z;
  double energy = 0.0;
  for (const auto& zt : z) energy += zt.squaredNorm();
  if (!(energy > 0.0)) throw Error(ErrorKind::SingularDesign, "MAR(1): factor series is all zero");

  MarModel m;
  m.PhiC = Matrix::Identity(r, r);
  m.PhiR = Matrix::Identity(d, d);
  // Start from the nearest Kronecker product to the VAR(1) estimate when that regression is
  // well posed; alternation from the identity alone can crawl for hundreds of sweeps.
  if (T >= d * r + 2) {
    try {
      const auto [R0, C0] = nearest_kronecker(fit_var1(Z).Phi, d, r);
      if (mar_objective(z, R0, C0) < mar_objective(z, m.PhiR, m.PhiC)) {
        m.PhiR = R0;
        m.PhiC = C0;
      }
    } catch (const Error&) {
    }
  }

  // Responses laid side by side (d x (T-1)r) for the row step and stacked (((T-1)d) x r) for
  // the column step.
  Matrix wide(d, (T - 1) * r);
  Matrix tall((T - 1) * d, r);
  for (Index t = 1; t < T; ++t) {
    wide.middleCols((t - 1) * r, r) = z[static_cast<std::size_t>(t)];
    tall.middleRows((t - 1) * d, d) = z[static_cast<std::size_t>(t)];
  }

  const double floor = 1e-24 * energy;
  double previous = mar_objective(z, m.PhiR, m.PhiC);
  m.history.push_back(previous);
  Matrix W(d, (T - 1) * r);
  Matrix V((T - 1) * d, r);
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    for (Index t = 1; t < T; ++t) W.middleCols((t - 1) * r, r) = z[static_cast<std::size_t>(t - 1)] * m.PhiC;
    m.PhiR = ls_solve(W.transpose(), wide.transpose(), "MAR(1) row step").transpose();

    for (Index t = 1; t < T; ++t) V.middleRows((t - 1) * d, d) = m.PhiR * z[static_cast<std::size_t>(t - 1)];
    m.PhiC = ls_solve(V, tall, "MAR(1) column step");

    // Fix the scale so consecutive iterates are comparable.
    const double norm = m.PhiR.norm();
    if (norm > 0.0) {
      m.PhiR /= norm;
      m.PhiC *= norm;
    }
    const double current = mar_objective(z, m.PhiR, m.PhiC);
    m.history.push_back(current);
    m.iterations = it + 1;
    const double change = std::abs(previous - current) / std::max(previous, std::numeric_limits<double>::min());
    previous = current;
    if (current <= floor || change < options.tol) {
      m.converged = true;
      break;
    }
  }
  m.objective = previous;

  const double scale = m.PhiR.norm();
  if (scale > 0.0) {
    m.PhiR /= scale;
    m.PhiC *= scale;
  }
  Index row = 0;
  Index col = 0;
  m.PhiR.cwiseAbs().maxCoeff(&row, &col);
  if (m.PhiR(row, col) < 0.0) {
    m.PhiR = -m.PhiR;
    m.PhiC = -m.PhiC;
  }
  return m;
}

Matrix forecast_factor(const VarModel& model, const Matrix& ZT, int h) {
  require_horizon(h);
  if (model.Phi.rows() != ZT.size()) throw Error(ErrorKind::ShapeError, "VAR dimension mismatch");
  Vector v = vec(ZT);
  for (int k = 0; k < h; ++k) v = model.Phi * v;
  return unvec(v, ZT.rows(), ZT.cols());
}

Matrix forecast_factor(const MarModel& model, const Matrix& ZT, int h) {
  require_horizon(h);
  if (model.PhiR.cols() != ZT.rows() || model.PhiC.rows() != ZT.cols()) {
    throw Error(ErrorKind::ShapeError, "MAR dimension mismatch");
  }
  return matrix_power(model.PhiR, h) * ZT * matrix_power(model.PhiC, h);
}

Matrix forecast_factor(const TemporalModel& model, const Matrix& ZT, int h) {
  return std::visit([&](const auto& m) { return forecast_factor(m, ZT, h); }, model);
}

Matrix predict_future(const FactorFit& fit, const SieveFit& sieve, const TemporalModel& model,
                      const SiteSet& sites, int h) {
  if (fit.T() == 0) throw Error(ErrorKind::ShapeError, "fit has no factor series");
  const Matrix zh = forecast_factor(model, fit.Z.z.back(), h);
  const Matrix loadings = fit.QB.Q * zh.transpose();  // p x d
  Matrix out(static_cast<Index>(sites.size()), static_cast<Index>(fit.p()));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    out.row(static_cast<Index>(i)) = (loadings * evaluate_loading(sieve, sites[i].at)).transpose();
  }
  return out;
}

Matrix reconstruct_covariance(const FactorFit& fit, const SieveFit& sieve, Coord u, Coord v, int h) {
  const auto T = static_cast<Index>(fit.T());
  if (T < 2 || std::abs(h) > T - 2) {
    throw Error(ErrorKind::InvalidArgument, "lag " + std::to_string(h) + " outside [-(T-2), T-2]");
  }
  const Matrix zbar = temporal_mean(fit.Z.z);
  const Vector qu = evaluate_loading(sieve, u);
  const Vector qv = evaluate_loading(sieve, v);
  const Index r = static_cast<Index>(fit.r());
  Matrix inner = Matrix::Zero(r, r);
  const Index lo = std::max<Index>(0, -h);
  const Index hi = std::min<Index>(T, T - h);
  for (Index t = lo; t < hi; ++t) {
    const Vector a = (fit.Z.z[static_cast<std::size_t>(t)] - zbar).transpose() * qu;
    const Vector b = (fit.Z.z[static_cast<std::size_t>(t + h)] - zbar).transpose() * qv;
    inner.noalias() += a * b.transpose();
  }
  inner /= static_cast<double>(T - std::abs(h));
  return fit.QB.Q * inner * fit.QB.Q.transpose();
}

}  // namespace stfm
