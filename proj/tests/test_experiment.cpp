#include "stfm/error.hpp"
#include "stfm/experiment.hpp"

#include <gtest/gtest.h>

using namespace stfm;

namespace {

const GridCell kSmall{60, 10, 40, 0.0};

bool same(const ReplicateResult& a, const ReplicateResult& b) {
  return a.seed == b.seed && a.ok == b.ok && a.d_hat == b.d_hat && a.r_hat == b.r_hat &&
         a.D_A == b.D_A && a.D_B == b.D_B && a.mse_second == b.mse_second &&
         a.mspe_spatial == b.mspe_spatial && a.mspe_mar == b.mspe_mar && a.mspe_var == b.mspe_var;
}

}  // namespace

TEST(Experiment, SeedsDependOnCellAndIndex) {
  EXPECT_EQ(replicate_seed(1, kSmall, 0), replicate_seed(1, kSmall, 0));
  EXPECT_NE(replicate_seed(1, kSmall, 0), replicate_seed(1, kSmall, 1));
  EXPECT_NE(replicate_seed(1, kSmall, 0), replicate_seed(2, kSmall, 0));
  GridCell other = kSmall;
  other.gamma = 0.5;
  EXPECT_NE(replicate_seed(1, kSmall, 0), replicate_seed(1, other, 0));
}

TEST(Experiment, ResultsIndependentOfWorkers) {
  const auto one = run_cell(kSmall, 6, 7, {}, 1);
  const auto four = run_cell(kSmall, 6, 7, {}, 4);
  ASSERT_EQ(one.size(), 6u);
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_TRUE(one[k].ok) << one[k].error;
    EXPECT_TRUE(same(one[k], four[k]));
    EXPECT_GE(one[k].D_A, 0.0);
    EXPECT_LE(one[k].D_A, 1.0);
  }
}

TEST(Experiment, FixedRanks) {
  ReplicateOptions o;
  o.ranks = std::pair<std::size_t, std::size_t>{3, 2};
  o.predictions = false;
  const auto r = run_replicate(kSmall, 11, o);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_EQ(r.d_hat, 3u);
  EXPECT_EQ(r.r_hat, 2u);
  EXPECT_FALSE(r.mspe_spatial.has_value());
}

TEST(Experiment, Summaries) {
  const auto s = summarize({1.0, std::nullopt, 3.0});
  EXPECT_EQ(s.count, 2u);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.0));

  std::vector<ReplicateResult> rs(4);
  for (auto& r : rs) {
    r.ok = true;
    r.d_hat = 3;
    r.r_hat = 2;
  }
  rs[3].r_hat = 1;
  EXPECT_DOUBLE_EQ(rank_frequency(rs, 3, 2), 0.75);
  const auto f = rank_frequencies(rs);
  ASSERT_EQ(f.size(), 2u);
}

TEST(Experiment, ConfigParsing) {
  const auto c = ExperimentConfig::from_json(nlohmann::json::parse(
      R"({"grid": {"n": [50, 100], "p": [20], "T": [60, 120], "gamma": [0, 0.5]}, "replicates": 3,
          "seed": 9, "ranks": [3, 2], "outputs": "x"})"));
  EXPECT_EQ(c.cells().size(), 8u);
  EXPECT_EQ(c.cells().front().T, 60u);
  EXPECT_EQ(c.cells().back().gamma, 0.5);
  EXPECT_EQ(c.ranks->first, 3u);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"replicates": 0})")), Error);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"grid": {"gamma": [3]}})")), Error);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"typo": 1})")), Error);
}
