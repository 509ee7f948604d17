#pragma once

#include "stfm/types.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace stfm {

/// sqrt(1 - tr(P_hat P) / max(d_hat, d)) for the column-space projectors of the arguments.
double space_distance(const Matrix& A_hat, const Matrix& A);

/// Mean over all T n p entries of the squared difference.
double mse_signals(const SignalTensor& est, const SignalTensor& truth);
double mse_signals(const Slices& est, const Slices& truth);

/// Same normalisation over the held-out sites: 1 / (n0 p T).
double mspe_spatial(const Slices& pred, const Slices& truth);

/// (1 / (n p)) sum of squared errors of one forecast slice.
double mspe_temporal(const Matrix& pred, const Matrix& truth);

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::optional<double> std;
  std::vector<std::pair<std::string, std::string>> config;
};

/// name,value,std,<config keys of the first report>. Every report must carry the same keys.
void write_metric_csv(std::ostream& out, const std::vector<MetricReport>& reports);

}  // namespace stfm
