#include "oracles.hpp"

#include "stfm/error.hpp"
#include "stfm/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace stfm;

namespace {

FactorFit small_fit() {
  SimConfig c;
  c.n = 24;
  c.p = 6;
  c.T = 30;
  c.seed = 5;
  const auto sim = generate(c);
  FitOptions o;
  o.seed = 3;
  return fit(sim.data, o);
}

}  // namespace

TEST(Json, MatrixRoundTrip) {
  std::mt19937_64 rng(81);
  const Matrix m = oracle::random_matrix(rng, 4, 3);
  const Json j = matrix_to_json(m);
  EXPECT_EQ(j.size(), 12u);
  EXPECT_DOUBLE_EQ(j[1].get<double>(), m(0, 1));
  EXPECT_EQ(matrix_from_json(j, 4, 3), m);
  EXPECT_THROW(matrix_from_json(j, 5, 3), Error);
}

TEST(Json, FactorFitRoundTrip) {
  const FactorFit f = small_fit();
  const Json j = to_json(f);
  const FactorFit g = factor_fit_from_json(j);
  EXPECT_EQ(g.QA.Q, f.QA.Q);
  EXPECT_EQ(g.QB.Q, f.QB.Q);
  EXPECT_EQ(g.QA1.Q, f.QA1.Q);
  EXPECT_EQ(g.T(), f.T());
  for (std::size_t t = 0; t < f.T(); ++t) EXPECT_EQ(g.Z.z[t], f.Z.z[t]);
  EXPECT_EQ(g.partition.idx1, f.partition.idx1);
  EXPECT_EQ(g.partition.dropped, f.partition.dropped);
  EXPECT_EQ(g.ranks.d_hat, f.ranks.d_hat);
  EXPECT_EQ(to_json(g).dump(), j.dump());
}

TEST(Json, SieveAndTemporalRoundTrip) {
  const FactorFit f = small_fit();
  std::vector<Coord> c;
  BasisSpec spec;
  spec.family = BasisFamily::Polynomial;
  spec.knots_per_axis = 2;
  std::vector<Coord> coords;
  const SieveFit s = fit_loading_functions(f.QA, Matrix::Identity(static_cast<Eigen::Index>(f.n()), spec.size()), spec);
  const SieveFit s2 = sieve_fit_from_json(to_json(s));
  EXPECT_EQ(s2.beta, s.beta);
  EXPECT_EQ(s2.spec.knots_per_axis, 2);
  EXPECT_EQ(s2.spec.family, BasisFamily::Polynomial);

  const MarModel mar = fit_mar1(f.Z);
  const auto back = temporal_model_from_json(to_json(TemporalModel{mar}));
  ASSERT_TRUE(std::holds_alternative<MarModel>(back));
  EXPECT_EQ(std::get<MarModel>(back).PhiR, mar.PhiR);
  EXPECT_EQ(std::get<MarModel>(back).history, mar.history);

  const VarModel var = fit_var1(f.Z);
  const auto vback = temporal_model_from_json(to_json(TemporalModel{var}));
  ASSERT_TRUE(std::holds_alternative<VarModel>(vback));
  EXPECT_EQ(std::get<VarModel>(vback).Phi, var.Phi);
}

TEST(Json, SimConfigStrict) {
  SimConfig c;
  c.n = 50;
  c.gamma = 0.5;
  const SimConfig d = sim_config_from_json(to_json(c));
  EXPECT_EQ(d.n, 50u);
  EXPECT_EQ(d.gamma, 0.5);
  EXPECT_THROW(sim_config_from_json(Json{{"n", 50}, {"bogus", 1}}), Error);
  EXPECT_THROW(sim_config_from_json(Json{{"n", "fifty"}}), Error);
  EXPECT_THROW(sim_config_from_json(Json{{"gamma", 2.0}}), Error);
}

TEST(Json, FileErrors) {
  try {
    read_json("/nonexistent/file.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
  const auto path = std::filesystem::temp_directory_path() / "stfm_bad.json";
  {
    std::ofstream(path) << "{not json";
  }
  try {
    read_json(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
  std::filesystem::remove(path);
}
