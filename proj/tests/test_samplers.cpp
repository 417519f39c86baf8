#include "nystrom/samplers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>

#include "nystrom/oasis.hpp"
#include "testutil.hpp"

using namespace nystrom;

namespace {

TEST(UniformSample, ExhaustiveDrawIsAPermutation) {
  for (std::uint64_t seed : {0u, 1u, 42u}) {
    auto draw = uniform_sample(5, 5, seed);
    std::set<Index> unique(draw.begin(), draw.end());
    EXPECT_EQ(unique.size(), 5u);
    EXPECT_EQ(*unique.begin(), 0);
    EXPECT_EQ(*unique.rbegin(), 4);
  }
}

TEST(UniformSample, DeterministicPerSeed) {
  auto a = uniform_sample(1000, 10, 7);
  auto b = uniform_sample(1000, 10, 7);
  EXPECT_EQ(a, b);
  auto c = uniform_sample(1000, 10, 8);
  EXPECT_NE(a, c);
}

TEST(UniformSample, NoRepeatsWithinOneDraw) {
  auto draw = uniform_sample(50, 30, 3);
  std::set<Index> unique(draw.begin(), draw.end());
  EXPECT_EQ(unique.size(), draw.size());
}

TEST(UniformSample, SingleDrawFrequenciesAreUniform) {
  // 10 000 draws of l=1 from n=4: each frequency within [0.23, 0.27].
  std::array<int, 4> counts{};
  for (int t = 0; t < 10000; ++t) {
    counts[static_cast<std::size_t>(uniform_sample(4, 1, split_seed(5, t))[0])] += 1;
  }
  for (int c : counts) {
    EXPECT_GE(c, 2300);
    EXPECT_LE(c, 2700);
  }
}

TEST(UniformSample, RejectsOversizedDraw) {
  EXPECT_THROW(uniform_sample(4, 5, 0), std::invalid_argument);
  EXPECT_THROW(uniform_sample(4, 0, 0), std::invalid_argument);
}

TEST(LeverageScores, SumsToKAndIsBounded) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Index n = 20 + static_cast<Index>(seed) * 5;
    Matrix g = testutil::random_psd(n, n / 2, seed);
    for (Index k : {Index{1}, n / 3, n}) {
      LeverageProfile profile = leverage_scores(g, k);
      EXPECT_NEAR(profile.scores.sum(), static_cast<double>(k), 1e-8);
      EXPECT_GE(profile.scores.minCoeff(), -1e-10);
      EXPECT_LE(profile.scores.maxCoeff(), 1.0 + 1e-10);
    }
  }
}

TEST(LeverageScores, IdentityDegenerateSpectrumSumsToK) {
  // G = I has no unique top-k basis; only basis-invariant facts are asserted.
  Matrix g = Matrix::Identity(6, 6);
  for (Index k : {Index{1}, Index{3}, Index{6}}) {
    EXPECT_NEAR(leverage_scores(g, k).scores.sum(), static_cast<double>(k), 1e-8);
  }
}

TEST(LeverageScores, RankOneAnalyticCase) {
  Vector x(5);
  x << 1, -2, 0.5, 3, -1;
  Matrix g = x * x.transpose();
  LeverageProfile profile = leverage_scores(g, 1);
  const double norm2 = x.squaredNorm();
  for (Index j = 0; j < 5; ++j) {
    EXPECT_NEAR(profile.scores[j], x[j] * x[j] / norm2, 1e-10);
  }
}

TEST(LeverageScores, FullRankGivesAllOnes) {
  Matrix g = testutil::random_spd(12, 9);
  LeverageProfile profile = leverage_scores(g, 12);
  EXPECT_TRUE(profile.scores.isApproxToConstant(1.0, 1e-10));
}

TEST(LeverageSample, AllMassOnOneIndex) {
  LeverageProfile profile;
  profile.k = 1;
  profile.scores = Vector::Zero(3);
  profile.scores[0] = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EXPECT_EQ(leverage_sample(profile, 1, seed)[0], 0);
  }
}

TEST(LeverageSample, ExhaustiveDrawCoversSupportFirst) {
  LeverageProfile profile;
  profile.k = 2;
  profile.scores = Vector::Zero(2);
  profile.scores << 0.9, 0.1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto draw = leverage_sample(profile, 2, seed);
    std::set<Index> unique(draw.begin(), draw.end());
    EXPECT_EQ(unique, (std::set<Index>{0, 1}));
  }
}

TEST(LeverageSample, EqualScoresGiveSymmetricMarginals) {
  LeverageProfile profile;
  profile.k = 2;
  profile.scores = Vector::Constant(4, 0.5);
  std::array<int, 4> counts{};
  for (int t = 0; t < 10000; ++t) {
    for (Index idx : leverage_sample(profile, 2, split_seed(9, t))) {
      counts[static_cast<std::size_t>(idx)] += 1;
    }
  }
  for (int c : counts) {
    EXPECT_NEAR(static_cast<double>(c) / 10000.0, 0.5, 0.03);
  }
}

TEST(LeverageSample, ZeroScorePoolFallsBackToUniform) {
  LeverageProfile profile;
  profile.k = 1;
  profile.scores = Vector::Zero(4);
  profile.scores[2] = 1.0;
  auto draw = leverage_sample(profile, 4, 13);
  std::set<Index> unique(draw.begin(), draw.end());
  EXPECT_EQ(unique.size(), 4u);
  EXPECT_EQ(draw[0], 2);  // the only scored index must come first
}

TEST(BuildFromIndices, IdentitySubset) {
  auto oracle = KernelOracle::from_matrix(Matrix::Identity(3, 3));
  NystromApprox approx = build_from_indices(oracle, std::vector<Index>{0, 1});
  Matrix expected = Matrix::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 1.0;
  EXPECT_TRUE(reconstruct(approx).isApprox(expected, 1e-12));
}

TEST(BuildFromIndices, SingularWFallsBackToPseudoInverse) {
  // Rank-1 G: columns 0 and 1 are parallel, W is exactly singular; the
  // truncated pseudo-inverse must reproduce the same reconstruction as a
  // single column.
  Vector x(4);
  x << 1, 2, -1, 0.5;
  Matrix g = x * x.transpose();
  auto oracle = KernelOracle::from_matrix(g);
  NystromApprox both = build_from_indices(oracle, std::vector<Index>{0, 1});
  NystromApprox one = build_from_indices(oracle, std::vector<Index>{0});
  EXPECT_TRUE(reconstruct(both).isApprox(reconstruct(one), 1e-10));
  EXPECT_TRUE(reconstruct(both).isApprox(g, 1e-10));
}

TEST(BuildFromIndices, MatchesOasisOwnFactorization) {
  Matrix g = testutil::random_psd(40, 8, 17);
  auto oracle = KernelOracle::from_matrix(g);
  OasisConfig config;
  config.max_columns = 8;
  config.seed = 23;
  OasisResult run = oasis_run(oracle, config);
  NystromApprox rebuilt = build_from_indices(oracle, run.approx.lambda);
  EXPECT_LE((reconstruct(rebuilt) - reconstruct(run.approx)).norm(), 1e-8 * g.norm());
}

TEST(BuildFromIndices, FullRankInverseIsConsistent) {
  Matrix g = testutil::random_spd(30, 29);
  auto draw = uniform_sample(30, 12, 4);
  NystromApprox approx = build_from_indices(KernelOracle::from_matrix(g), draw);
  Matrix w = approx.sampled_block();
  EXPECT_LE((approx.winv * w - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BuildFromIndices, EmptySetGivesZeroApproximation) {
  auto oracle = KernelOracle::from_matrix(Matrix::Identity(3, 3));
  NystromApprox approx = build_from_indices(oracle, std::vector<Index>{});
  EXPECT_EQ(approx.k(), 0);
  EXPECT_TRUE(reconstruct(approx).isZero(0.0));
}

}  // namespace
