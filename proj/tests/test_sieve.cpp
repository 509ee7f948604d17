#include "oracles.hpp"

#include "stfm/error.hpp"
#include "stfm/sieve.hpp"
#include "stfm/simgen.hpp"

#include <gtest/gtest.h>

using namespace stfm;

namespace {

SiteSet uniform_sites(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Coord> c(n);
  for (auto& s : c) s = {u(rng), u(rng)};
  return SiteSet::from_coords(c);
}

LoadingSpace sampled(const SiteSet& sites, int which) {
  Matrix q(static_cast<Eigen::Index>(sites.size()), 1);
  for (std::size_t i = 0; i < sites.size(); ++i) q(static_cast<Eigen::Index>(i), 0) = true_loading_functions(sites[i].at)[static_cast<std::size_t>(which)];
  return {q, {}};
}

BasisSpec poly(int max_power) {
  BasisSpec s;
  s.family = BasisFamily::Polynomial;
  s.knots_per_axis = max_power;
  return s;
}

BasisSpec bspline(int knots) {
  BasisSpec s;
  s.family = BasisFamily::BSpline;
  s.knots_per_axis = knots;
  s.domain = {-1, 1, -1, 1};
  return s;
}

}  // namespace

TEST(Basis, PolynomialPowerOneIsBilinear) {
  const auto sites = SiteSet::from_coords({{2, 3}, {0.5, -1}, {1, 1}, {-2, 0.25}, {0, 0}});
  const Matrix X = build_basis(poly(1), sites);
  ASSERT_EQ(X.cols(), 4);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto s = sites[i].at;
    const Eigen::Vector4d expect(1, s.y, s.x, s.x * s.y);  // (i, j) row-major over (x power, y power)
    EXPECT_LT((X.row(static_cast<Eigen::Index>(i)).transpose() - expect).norm(), 1e-15);
  }
}

TEST(Basis, ConstantReproducedAndPartitionOfUnity) {
  std::mt19937_64 rng(41);
  const auto sites = uniform_sites(rng, 100);
  const Matrix X = build_basis(bspline(6), sites);
  EXPECT_EQ(X.cols(), 64);
  Vector e1 = Vector::Zero(X.cols());
  e1(0) = 1.0;
  const Matrix P = build_basis(poly(2), sites);
  Vector pe = Vector::Zero(P.cols());
  pe(0) = 1.0;
  EXPECT_LT(((P * pe).array() - 1.0).abs().maxCoeff(), 1e-15);
  EXPECT_LT((X.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GE(X.minCoeff(), 0.0);
}

TEST(Basis, ErrorsOnTooManyFunctionsOrOutside) {
  const auto few = SiteSet::from_coords({{0, 0}, {0.1, 0.1}, {0.2, 0.3}});
  EXPECT_THROW(build_basis(poly(1), few), Error);
  try {
    build_basis(bspline(2), SiteSet::from_coords({{0, 0}, {1.5, 0}, {0.2, 0.1}, {0.3, 0.3}, {0.1, 0.6},
                                                  {0.2, 0.2}, {0.4, 0.1}, {0.7, 0.7}, {0.1, 0.9}, {0.5, 0.5},
                                                  {0.6, 0.1}, {0.3, 0.8}, {0.9, 0.9}, {0.8, 0.2}, {0.2, 0.7},
                                                  {0.6, 0.6}, {-0.5, -0.5}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
  try {
    build_basis(poly(3), few);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Underdetermined);
  }
}

TEST(SieveFit, InSpanTargetsAreExact) {
  std::mt19937_64 rng(42);
  const auto sites = uniform_sites(rng, 40);
  const auto spec = poly(1);
  const Matrix X = build_basis(spec, sites);
  const auto f1 = fit_loading_functions(sampled(sites, 0), X, spec);
  EXPECT_LT(f1.residual_rms(0), 1e-10);
  EXPECT_NEAR(evaluate_loading(f1, {0.3, -0.4})(0), 0.35, 1e-10);
  const auto f3 = fit_loading_functions(sampled(sites, 2), X, spec);
  EXPECT_LT(f3.residual_rms(0), 1e-10);
  EXPECT_FALSE(f1.ill_conditioned);
}

TEST(SieveFit, RefinementReducesResidual) {
  std::mt19937_64 rng(43);
  const auto sites = uniform_sites(rng, 400);
  const auto target = sampled(sites, 1);
  double previous = std::numeric_limits<double>::infinity();
  for (int knots : {4, 8}) {
    const auto spec = bspline(knots);
    const double rms = fit_loading_functions(target, build_basis(spec, sites), spec).residual_rms(0);
    EXPECT_LE(rms, previous);
    previous = rms;
  }
}

TEST(SieveFit, ResidualOrthogonalToDesign) {
  std::mt19937_64 rng(44);
  const auto sites = uniform_sites(rng, 150);
  const auto spec = bspline(5);
  const Matrix X = build_basis(spec, sites);
  const LoadingSpace QA{oracle::random_orthonormal(rng, 150, 3), {}};
  const auto fit = fit_loading_functions(QA, X, spec);
  const Matrix resid = QA.Q - X * fit.beta;
  EXPECT_LT((X.transpose() * resid).cwiseAbs().maxCoeff(), 1e-8);
  for (Eigen::Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(fit.residual_rms(j), resid.col(j).norm() / std::sqrt(150.0), 1e-14);
  }
}

TEST(SieveFit, EvaluationMatchesDesignRowsAndRotates) {
  std::mt19937_64 rng(45);
  const auto sites = uniform_sites(rng, 120);
  const auto spec = bspline(4);
  const Matrix X = build_basis(spec, sites);
  const LoadingSpace QA{oracle::random_orthonormal(rng, 120, 3), {}};
  const auto fit = fit_loading_functions(QA, X, spec);
  const Vector at5 = evaluate_loading(fit, sites[5].at);
  ASSERT_EQ(at5.size(), 3);
  EXPECT_LT((at5 - (X.row(5) * fit.beta).transpose()).norm(), 1e-14);

  const Matrix O = oracle::random_orthonormal(rng, 3, 3);
  const auto rotated = fit_loading_functions({QA.Q * O, {}}, X, spec);
  for (const Coord s : {Coord{0.1, 0.2}, Coord{-0.7, 0.9}}) {
    EXPECT_LT((evaluate_loading(rotated, s) - O.transpose() * evaluate_loading(fit, s)).norm(), 1e-8);
  }
  EXPECT_THROW(evaluate_loading(fit, {1.2, 0}), Error);
}

TEST(SieveFit, RankDeficientDesign) {
  const auto sites = SiteSet::from_coords({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
  const auto spec = poly(1);
  try {
    fit_loading_functions({Matrix::Ones(6, 1), {}}, build_basis(spec, sites), spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularDesign);
  }
}

TEST(SieveFit, IllConditionedIsFlagged) {
  std::vector<Coord> c;
  for (int i = 0; i < 20; ++i) c.push_back({1000.0 + i / 19.0, 1000.0 + ((i * 7) % 20) / 19.0});
  const auto sites = SiteSet::from_coords(c);
  const auto spec = poly(1);
  const auto fit = fit_loading_functions({Matrix::Ones(20, 1), {}}, build_basis(spec, sites), spec);
  EXPECT_TRUE(fit.ill_conditioned);
  EXPECT_GT(fit.condition_number, kIllConditionedThreshold);
}

TEST(SieveDefault, SquareOfAbout) {
  std::mt19937_64 rng(46);
  const auto s400 = uniform_sites(rng, 400);
  const auto spec = BasisSpec::default_for(s400);
  EXPECT_EQ(spec.family, BasisFamily::BSpline);
  EXPECT_EQ(spec.functions_on_axis(0), 5);
  EXPECT_LE(spec.size(), 400);
  for (const auto& s : s400.sites()) EXPECT_TRUE(spec.domain.contains(s.at));
}
