#include "stfm/sieve.hpp"

#include "stfm/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace stfm {

namespace {

using Index = Eigen::Index;

void require_in_domain(const BasisSpec& spec, Coord s) {
  if (spec.family == BasisFamily::BSpline && !spec.domain.contains(s)) {
    throw Error(ErrorKind::OutOfDomain, "site (" + std::to_string(s.x) + ", " +
                                            std::to_string(s.y) + ") lies outside the basis domain");
  }
}

// Cox-de Boor on a clamped uniform knot vector over [lo, hi] with `count` distinct knots.
Vector bspline_values(double x, double lo, double hi, int degree, int count) {
  const int intervals = count - 1;
  const int nfun = count + degree - 1;
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(nfun + degree + 1));
  for (int k = 0; k < degree; ++k) knots.push_back(lo);
  for (int k = 0; k <= intervals; ++k) knots.push_back(lo + (hi - lo) * k / intervals);
  for (int k = 0; k < degree; ++k) knots.push_back(hi);

  // Locate the knot span; the right end belongs to the last span.
  int span = degree + intervals - 1;
  for (int k = degree; k < degree + intervals; ++k) {
    if (x < knots[static_cast<std::size_t>(k + 1)]) {
      span = k;
      break;
    }
  }

  // Non-zero functions on the span: N_{span-degree..span}.
  std::vector<double> local(static_cast<std::size_t>(degree + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(degree + 1));
  std::vector<double> right(static_cast<std::size_t>(degree + 1));
  local[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = denom == 0.0 ? 0.0 : local[static_cast<std::size_t>(r)] / denom;
      local[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    local[static_cast<std::size_t>(j)] = saved;
  }

  Vector out = Vector::Zero(nfun);
  for (int r = 0; r <= degree; ++r) out(span - degree + r) = local[static_cast<std::size_t>(r)];
  return out;
}

}  // namespace

Domain Domain::bounding(const std::vector<Coord>& coords, double margin) {
  if (coords.empty()) throw Error(ErrorKind::ShapeError, "no coordinates");
  Domain d{coords[0].x, coords[0].x, coords[0].y, coords[0].y};
  for (const auto& c : coords) {
    d.xmin = std::min(d.xmin, c.x);
    d.xmax = std::max(d.xmax, c.x);
    d.ymin = std::min(d.ymin, c.y);
    d.ymax = std::max(d.ymax, c.y);
  }
  const double wx = std::max(d.xmax - d.xmin, 1e-12);
  const double wy = std::max(d.ymax - d.ymin, 1e-12);
  d.xmin -= margin * wx;
  d.xmax += margin * wx;
  d.ymin -= margin * wy;
  d.ymax += margin * wy;
  return d;
}

int BasisSpec::functions_on_axis(int axis) const {
  if (family == BasisFamily::Polynomial) return knots_per_axis + 1;
  return knots_per_axis + degree[static_cast<std::size_t>(axis)] - 1;
}

BasisSpec BasisSpec::default_for(const SiteSet& sites) {
  BasisSpec spec;
  spec.family = BasisFamily::BSpline;
  spec.degree = {3, 3};
  spec.domain = Domain::bounding(sites.coords());
  const double target = std::ceil(std::sqrt(static_cast<double>(sites.size())));
  int per_axis = static_cast<int>(std::ceil(std::sqrt(target)));
  per_axis = std::max(per_axis, spec.degree[0] + 1);
  while (per_axis > spec.degree[0] + 1 &&
         static_cast<std::size_t>(per_axis * per_axis) > sites.size()) {
    --per_axis;
  }
  spec.knots_per_axis = per_axis - spec.degree[0] + 1;
  return spec;
}

Vector axis_basis(const BasisSpec& spec, int axis, double x) {
  if (spec.family == BasisFamily::Polynomial) {
    Vector out(spec.knots_per_axis + 1);
    double power = 1.0;
    for (Index i = 0; i < out.size(); ++i) {
      out(i) = power;
      power *= x;
    }
    return out;
  }
  const int degree = spec.degree[static_cast<std::size_t>(axis)];
  if (degree < 0 || spec.knots_per_axis < 2) {
    throw Error(ErrorKind::InvalidArgument, "B-spline basis needs degree >= 0 and >= 2 knots");
  }
  const double lo = axis == 0 ? spec.domain.xmin : spec.domain.ymin;
  const double hi = axis == 0 ? spec.domain.xmax : spec.domain.ymax;
  return bspline_values(x, lo, hi, degree, spec.knots_per_axis);
}

Vector basis_row(const BasisSpec& spec, Coord s) {
  require_in_domain(spec, s);
  const Vector bx = axis_basis(spec, 0, s.x);
  const Vector by = axis_basis(spec, 1, s.y);
  Vector row(bx.size() * by.size());
  for (Index i = 0; i < bx.size(); ++i) row.segment(i * by.size(), by.size()) = bx(i) * by;
  return row;
}

Matrix build_basis(const BasisSpec& spec, const SiteSet& sites) {
  const auto J = static_cast<std::size_t>(spec.size());
  if (J > sites.size()) {
    throw Error(ErrorKind::Underdetermined, "basis has " + std::to_string(J) +
                                                " functions but only " +
                                                std::to_string(sites.size()) + " sites");
  }
  Matrix design(static_cast<Index>(sites.size()), static_cast<Index>(J));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    design.row(static_cast<Index>(i)) = basis_row(spec, sites[i].at).transpose();
  }
  return design;
}

SieveFit fit_loading_functions(const LoadingSpace& QA, const Matrix& design, const BasisSpec& spec) {
  if (design.rows() != QA.Q.rows() || design.cols() != spec.size()) {
    throw Error(ErrorKind::ShapeError, "design does not match QA rows or basis size");
  }
  if (design.cols() > design.rows()) {
    throw Error(ErrorKind::Underdetermined, "more basis functions than sites");
  }
  const Eigen::JacobiSVD<Matrix> svd(design);
  const Vector& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(design.rows()) * smax;
  if (!(smin > tol)) {
    throw Error(ErrorKind::SingularDesign, "sieve design matrix is rank deficient");
  }

  SieveFit out;
  out.spec = spec;
  out.condition_number = smax / smin;
  out.ill_conditioned = out.condition_number > kIllConditionedThreshold;
  const Eigen::HouseholderQR<Matrix> qr(design);
  out.beta = qr.solve(QA.Q);
  const Matrix resid = QA.Q - design * out.beta;
  out.residual_rms = resid.colwise().norm().transpose() / std::sqrt(static_cast<double>(design.rows()));
  return out;
}

Vector evaluate_loading(const SieveFit& fit, Coord s0) {
  return fit.beta.transpose() * basis_row(fit.spec, s0);
}

}  // namespace stfm
