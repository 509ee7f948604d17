#pragma once

#include "stfm/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <utility>

namespace stfm {

enum class CsvLayout { Long, Wide };

/// Per (site, variable) location and scale; both stored n x p.
struct ScalingParams {
  Matrix mean;
  Matrix sd;

  /// Undo standardize(): x = z * sd + mean.
  STDataTensor invert(const STDataTensor& standardized) const;
};

/// Per-site regression coefficients; coef[i] is the m x p matrix C(s_i).
struct CoefficientField {
  std::vector<Matrix> coef;

  std::size_t n() const { return coef.size(); }
  std::size_t m() const { return coef.empty() ? 0 : static_cast<std::size_t>(coef[0].rows()); }
  std::size_t p() const { return coef.empty() ? 0 : static_cast<std::size_t>(coef[0].cols()); }
};

// Long layout: header exactly "time,site_id,x,y,variable,value".
// Wide layout: "time,site_id,x,y,<var_1>,...,<var_p>".
STDataTensor load_csv(const std::filesystem::path& path, CsvLayout layout);
STDataTensor read_csv(std::istream& in, CsvLayout layout);

void write_long_csv(std::ostream& out, const STDataTensor& data);
void write_long_csv(const std::filesystem::path& path, const STDataTensor& data);

/// Site lists with header "site_id,x,y".
SiteSet read_sites_csv(std::istream& in);
SiteSet load_sites_csv(const std::filesystem::path& path);
void write_sites_csv(std::ostream& out, const SiteSet& sites);

/// output[t] = input[t + period] - input[t]; T shrinks by `period`.
STDataTensor deseasonalize_monthly(const STDataTensor& data, std::size_t period);

/// Zero mean, unit sample standard deviation (divisor T - 1) for every (site, variable) series.
std::pair<STDataTensor, ScalingParams> standardize(const STDataTensor& data);

/// Per-site least squares of y_t(s_i) on z_t(s_i). `covariates[t]` is n x m.
std::pair<STDataTensor, CoefficientField> remove_covariate_mean(const STDataTensor& data,
                                                                const Slices& covariates);

}  // namespace stfm
