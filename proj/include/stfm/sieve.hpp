#pragma once

#include "stfm/factor.hpp"
#include "stfm/types.hpp"

#include <array>

namespace stfm {

enum class BasisFamily { Polynomial, BSpline };

struct Domain {
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;

  bool contains(Coord s) const {
    return s.x >= xmin && s.x <= xmax && s.y >= ymin && s.y <= ymax;
  }
  /// Bounding box of the coordinates, widened by `margin` times the extent on every side.
  static Domain bounding(const std::vector<Coord>& coords, double margin = 0.01);
};

/// Tensor-product basis on the plane.
///
/// Polynomial: monomials x^i y^j with 0 <= i, j <= knots_per_axis (the maximum power).
/// B-spline: clamped uniform knots; knots_per_axis counts the distinct knots including both
/// ends, so each axis carries knots_per_axis + degree - 1 functions.
struct BasisSpec {
  BasisFamily family = BasisFamily::BSpline;
  std::array<int, 2> degree{3, 3};
  int knots_per_axis = 2;
  Domain domain;

  int functions_on_axis(int axis) const;
  int size() const { return functions_on_axis(0) * functions_on_axis(1); }

  /// Cubic B-splines with about ceil(sqrt(n)) terms (rounded up to a square), on the
  /// 1%-widened bounding box of the sites.
  static BasisSpec default_for(const SiteSet& sites);
};

struct SieveFit {
  BasisSpec spec;
  Matrix beta;                 // J x d
  Vector residual_rms;         // d
  double condition_number = 0.0;
  bool ill_conditioned = false;

  Eigen::Index d() const { return beta.cols(); }
};

/// Values of every univariate function on one axis at x (length functions_on_axis).
Vector axis_basis(const BasisSpec& spec, int axis, double x);

/// Basis row u(s) of length J. Column index = i * K_y + j for axis-1 index i, axis-2 index j.
Vector basis_row(const BasisSpec& spec, Coord s);

/// n x J design matrix.
Matrix build_basis(const BasisSpec& spec, const SiteSet& sites);

/// Least-squares sieve coefficients for each column of QA.
SieveFit fit_loading_functions(const LoadingSpace& QA, const Matrix& design, const BasisSpec& spec);

/// (q_1(s0), ..., q_d(s0)).
Vector evaluate_loading(const SieveFit& fit, Coord s0);

/// Design conditioning beyond this is flagged, not rejected.
inline constexpr double kIllConditionedThreshold = 1e10;

}  // namespace stfm
