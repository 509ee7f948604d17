#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace stfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A time-indexed stack of equally sized matrices; element t is the t-th slice.
using Slices = std::vector<Matrix>;

struct Coord {
  double x = 0.0;
  double y = 0.0;
};

struct Site {
  std::string id;
  Coord at;
};

/// Ordered set of sampling locations. Row i of every data slice refers to sites()[i].
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<Site> sites);

  /// Convenience: ids are generated as "s0", "s1", ...
  static SiteSet from_coords(const std::vector<Coord>& coords, const std::string& prefix = "s");

  std::size_t size() const { return sites_.size(); }
  const Site& operator[](std::size_t i) const { return sites_[i]; }
  const std::vector<Site>& sites() const { return sites_; }
  std::vector<Coord> coords() const;

 private:
  std::vector<Site> sites_;
};

/// Observations Y over (time T, site n, variable p). slices[t] is the n x p matrix Y_t.
class STDataTensor {
 public:
  STDataTensor() = default;
  STDataTensor(Slices slices, SiteSet sites, std::vector<std::string> variables,
               std::vector<std::string> times);

  /// Builds a tensor with generated variable names ("v0", ...) and time labels ("0", ...).
  static STDataTensor from_slices(Slices slices, SiteSet sites);

  std::size_t T() const { return slices_.size(); }
  std::size_t n() const { return sites_.size(); }
  std::size_t p() const { return variables_.size(); }

  const Matrix& operator[](std::size_t t) const { return slices_[t]; }
  const Slices& slices() const { return slices_; }
  const SiteSet& sites() const { return sites_; }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<std::string>& times() const { return times_; }

  /// The T-vector for one (site, variable) series.
  Vector series(std::size_t site, std::size_t variable) const;

  /// Same metadata, new values. Shape is re-validated.
  STDataTensor with_slices(Slices slices) const;

 private:
  void validate() const;

  Slices slices_;
  SiteSet sites_;
  std::vector<std::string> variables_;
  std::vector<std::string> times_;
};

/// Signals share the layout of the observations.
using SignalTensor = STDataTensor;

}  // namespace stfm
