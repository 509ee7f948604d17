#include "stfm/metrics.hpp"

#include "stfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace stfm {

namespace {

using Index = Eigen::Index;

Matrix orthonormal_basis(const Matrix& A) {
  if (A.cols() == 0 || A.rows() < A.cols()) {
    throw Error(ErrorKind::SingularInput, "matrix cannot have full column rank");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-12);
  if (qr.rank() < A.cols()) throw Error(ErrorKind::SingularInput, "matrix is column-rank deficient");
  return qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
}

double sum_sq_diff(const Slices& a, const Slices& b, double& count) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeError, "slice counts differ");
  double total = 0.0;
  count = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].rows() != b[t].rows() || a[t].cols() != b[t].cols()) {
      throw Error(ErrorKind::ShapeError, "slice shapes differ at t=" + std::to_string(t));
    }
    total += (a[t] - b[t]).squaredNorm();
    count += static_cast<double>(a[t].size());
  }
  if (count == 0.0) throw Error(ErrorKind::ShapeError, "empty input");
  return total;
}

std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

double space_distance(const Matrix& A_hat, const Matrix& A) {
  if (A_hat.rows() != A.rows()) throw Error(ErrorKind::ShapeError, "row counts differ");
  const Matrix Qh = orthonormal_basis(A_hat);
  const Matrix Q = orthonormal_basis(A);
  // 1 - tr(P_small P_big) / m = ||(I - P_small) Q_big||_F^2 / m, which avoids the cancellation in
  // 1 - overlap near D = 0.
  const Matrix& big = Qh.cols() >= Q.cols() ? Qh : Q;
  const Matrix& small = Qh.cols() >= Q.cols() ? Q : Qh;
  const Matrix residual = big - small * (small.transpose() * big);
  const double m = static_cast<double>(big.cols());
  return std::min(1.0, residual.norm() / std::sqrt(m));
}

double mse_signals(const Slices& est, const Slices& truth) {
  double count = 0.0;
  const double total = sum_sq_diff(est, truth, count);
  return total / count;
}

double mse_signals(const SignalTensor& est, const SignalTensor& truth) {
  return mse_signals(est.slices(), truth.slices());
}

double mspe_spatial(const Slices& pred, const Slices& truth) { return mse_signals(pred, truth); }

double mspe_temporal(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw Error(ErrorKind::ShapeError, "prediction and truth shapes differ");
  }
  if (pred.size() == 0) throw Error(ErrorKind::ShapeError, "empty input");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

void write_metric_csv(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "name,value,std";
  if (!reports.empty()) {
    for (const auto& [key, value] : reports.front().config) out << ',' << key;
  }
  out << '\n';
  for (const auto& r : reports) {
    if (!reports.empty() && r.config.size() != reports.front().config.size()) {
      throw Error(ErrorKind::ShapeError, "metric reports carry different config columns");
    }
    out << r.name << ',' << csv_number(r.value) << ',';
    if (r.std) out << csv_number(*r.std);
    for (const auto& [key, value] : r.config) out << ',' << value;
    out << '\n';
  }
}

}  // namespace stfm
