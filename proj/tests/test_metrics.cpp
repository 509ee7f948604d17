#include "oracles.hpp"

#include "stfm/error.hpp"
#include "stfm/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace stfm;

TEST(SpaceDistance, Extremes) {
  std::mt19937_64 rng(71);
  const Matrix A = oracle::random_matrix(rng, 10, 3);
  EXPECT_NEAR(space_distance(A, A), 0.0, 1e-12);
  const Matrix E = Matrix::Identity(6, 6);
  EXPECT_NEAR(space_distance(E.leftCols(3), E.rightCols(3)), 1.0, 1e-15);
  const Matrix O = oracle::random_orthonormal(rng, 3, 3);
  EXPECT_NEAR(space_distance(A * O, A), 0.0, 1e-12);
}

TEST(SpaceDistance, AgainstProjectorFormula) {
  std::mt19937_64 rng(72);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix A = oracle::random_matrix(rng, 12, 3);
    const Matrix B = oracle::random_matrix(rng, 12, rep % 2 ? 3 : 2);
    const Matrix PA = A * (A.transpose() * A).inverse() * A.transpose();
    const Matrix PB = B * (B.transpose() * B).inverse() * B.transpose();
    const double expect = std::sqrt(1.0 - (PA * PB).trace() / std::max(A.cols(), B.cols()));
    EXPECT_NEAR(space_distance(B, A), expect, 1e-10);
    EXPECT_GE(space_distance(B, A), 0.0);
    EXPECT_LE(space_distance(B, A), 1.0);
    if (rep % 2) EXPECT_NEAR(space_distance(A, B), space_distance(B, A), 1e-12);
  }
}

TEST(SpaceDistance, ColumnScaling) {
  std::mt19937_64 rng(73);
  const Matrix A = oracle::random_matrix(rng, 15, 3);
  const Matrix B = oracle::random_matrix(rng, 15, 3);
  const Matrix S = Eigen::Vector3d(1e-3, 5.0, 2e4).asDiagonal();
  EXPECT_NEAR(space_distance(A * S, B), space_distance(A, B), 1e-10);
  EXPECT_NEAR(space_distance(A, B * S), space_distance(A, B), 1e-10);
}

TEST(SpaceDistance, RankDeficient) {
  Matrix A = Matrix::Ones(5, 2);
  try {
    space_distance(A, Matrix::Identity(5, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularInput);
  }
}

TEST(Mse, Examples) {
  std::mt19937_64 rng(74);
  const Slices truth = oracle::random_slices(rng, 4, 5, 3);
  Slices plus = truth;
  for (auto& m : plus) m.array() += 1.0;
  EXPECT_EQ(mse_signals(truth, truth), 0.0);
  EXPECT_NEAR(mse_signals(plus, truth), 1.0, 1e-12);
  EXPECT_EQ(mspe_spatial(truth, truth), 0.0);
  Slices bad = truth;
  bad[0] = Matrix::Zero(5, 4);
  EXPECT_THROW(mse_signals(bad, truth), Error);
  EXPECT_THROW(mspe_spatial(bad, truth), Error);
}

TEST(Mse, LoopOracleAndPermutation) {
  std::mt19937_64 rng(75);
  for (int rep = 0; rep < 20; ++rep) {
    const Slices a = oracle::random_slices(rng, 6, 7, 4);
    const Slices b = oracle::random_slices(rng, 6, 7, 4);
    const double expect = oracle::triple_loop_mse(a, b);
    EXPECT_NEAR(mse_signals(a, b), expect, 1e-12);
    EXPECT_NEAR(mspe_spatial(a, b), expect, 1e-12);

    std::vector<int> rows(7), cols(4);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(cols.begin(), cols.end(), rng);
    Slices pa, pb;
    for (std::size_t t = 0; t < a.size(); ++t) {
      pa.push_back(a[t](rows, cols));
      pb.push_back(b[t](rows, cols));
    }
    EXPECT_NEAR(mse_signals(pa, pb), expect, 1e-12);
  }
}

TEST(Mse, SignalTensorOverload) {
  std::mt19937_64 rng(76);
  const Slices a = oracle::random_slices(rng, 3, 4, 2);
  const Slices b = oracle::random_slices(rng, 3, 4, 2);
  std::vector<Coord> c(4);
  const auto sites = SiteSet::from_coords(c);
  EXPECT_NEAR(mse_signals(SignalTensor::from_slices(a, sites), SignalTensor::from_slices(b, sites)),
              oracle::triple_loop_mse(a, b), 1e-12);
}

TEST(MspeTemporal, Examples) {
  std::mt19937_64 rng(77);
  const Matrix t = oracle::random_matrix(rng, 6, 4);
  EXPECT_EQ(mspe_temporal(t, t), 0.0);
  EXPECT_NEAR(mspe_temporal(t.array() + 2.0, t), 4.0, 1e-12);
  const Matrix u = oracle::random_matrix(rng, 6, 4);
  EXPECT_NEAR(mspe_temporal(u, t), oracle::triple_loop_mse({u}, {t}), 1e-12);
  EXPECT_THROW(mspe_temporal(u, t.leftCols(3)), Error);
}

TEST(MetricCsv, Layout) {
  std::vector<MetricReport> reports;
  reports.push_back({"D_A", 0.0125, 0.003, {{"n", "400"}, {"p", "40"}}});
  reports.push_back({"D_B", 0.5, std::nullopt, {{"n", "400"}, {"p", "40"}}});
  std::ostringstream out;
  write_metric_csv(out, reports);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "name,value,std,n,p");
  EXPECT_NE(s.find("D_B,0.5,,400,40"), std::string::npos);
}
