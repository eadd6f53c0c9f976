#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <numeric>

#include "bevtrack/errors.h"
#include "bevtrack/search.h"

using namespace bevtrack;

TEST(Kalman, TracksConstantVelocity) {
  KalmanConfig cfg;
  auto s = kalman_init(PoseBev{0, 0, 0}, cfg);
  for (int t = 1; t <= 30; ++t) {
    s = kalman_update(kalman_predict(s, cfg), PoseBev{0.5 * t, 0.2 * t, 0.0}, cfg);
  }
  EXPECT_NEAR(s.mean(3), 0.5, 0.02);
  EXPECT_NEAR(s.mean(4), 0.2, 0.02);
  const auto p = kalman_predict(s, cfg);
  EXPECT_NEAR(p.mean(0), 0.5 * 31, 0.05);
  // Covariance stays symmetric positive definite.
  EXPECT_LT((p.cov - p.cov.transpose()).norm(), 1e-12);
  EXPECT_GT(p.cov.llt().matrixL().determinant(), 0.0);
}

TEST(Kalman, ProposalsStartWithThePredictedMean) {
  KalmanConfig cfg;
  Rng rng(1);
  auto s = kalman_init(PoseBev{1, 2, 0.3}, cfg);
  s.mean(3) = 0.4;
  const auto kp = kalman_propose(s, BoxSpec{1.8, 4.0, 1.5}, 16, cfg, rng);
  ASSERT_EQ(kp.rects.size(), 16u);
  EXPECT_NEAR(kp.rects[0].x, 1.4, 1e-12);
  EXPECT_NEAR(kp.rects[0].z, 2.0, 1e-12);
  for (const auto& r : kp.rects) {
    EXPECT_EQ(r.w, 1.8);
    EXPECT_EQ(r.l, 4.0);
  }
  EXPECT_THROW(kalman_propose(s, BoxSpec{1, 1, 1}, 0, cfg, rng), InvalidArgument);
}

TEST(Kalman, AngleInnovationWraps) {
  KalmanConfig cfg;
  auto s = kalman_init(PoseBev{0, 0, 3.1}, cfg);
  s = kalman_update(kalman_predict(s, cfg), PoseBev{0, 0, -3.1}, cfg);
  // Crossing +-pi moves the estimate a little, not across the circle.
  EXPECT_GT(std::abs(s.mean(2)), 3.0);
}

TEST(SystematicResample, CountsFollowWeights) {
  Rng rng(2);
  const std::vector<double> w{0.0, 3.0, 1.0, 0.0};
  std::vector<int> counts(4, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> big;
    for (double v : w) big.insert(big.end(), 25, v);
    for (int i : systematic_resample(big, rng)) counts[i / 25]++;
  }
  EXPECT_EQ(counts[0], 0);
  EXPECT_EQ(counts[3], 0);
  // Exact multiples up to one copy per trial moving across a group boundary.
  EXPECT_NEAR(counts[1], 75 * 100, 100);
  EXPECT_NEAR(counts[2], 25 * 100, 100);
  EXPECT_THROW(systematic_resample(std::vector<double>{0.0, 0.0}, rng), InvalidArgument);
}

TEST(ParticleFilter, StepKeepsCountAndUniformWeights) {
  Rng rng(3);
  ParticleConfig cfg;
  auto ps = particle_init(PoseBev{1, 1, 0}, 32);
  std::vector<double> scores(32);
  std::iota(scores.begin(), scores.end(), 0.0);
  const auto step = particle_step(ps, scores, BoxSpec{1.8, 4.0, 1.5}, cfg, rng);
  ASSERT_EQ(step.rects.size(), 32u);
  EXPECT_NEAR(std::accumulate(step.set.weights.begin(), step.set.weights.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(effective_sample_size(step.set.weights), 32.0, 1e-9);
  EXPECT_THROW(particle_step(ps, std::vector<double>(3, 1.0), BoxSpec{1, 1, 1}, cfg, rng), InvalidArgument);
}

TEST(Exhaustive, GroundTruthFirstThenFullGrid) {
  const PoseBev prev{2, 3, 0.1}, gt{2.3, 3.1, 0.12};
  const auto rects = exhaustive_propose(prev, gt, BoxSpec{1.8, 4.0, 1.5});
  EXPECT_EQ(exhaustive_grid_count(ExhaustiveGrid{}), 17u * 17u * 9u);
  ASSERT_EQ(rects.size(), 1u + 17u * 17u * 9u);
  EXPECT_EQ(rects[0].x, gt.x);
  EXPECT_EQ(rects[0].z, gt.z);
  EXPECT_EQ(rects[0].theta, gt.theta);
  EXPECT_NEAR(rects[1].x, prev.x - 2.0, 1e-12);
  EXPECT_NEAR(rects[1].z, prev.z - 2.0, 1e-12);
  EXPECT_NEAR(rects[1].theta, prev.theta - 10 * M_PI / 180, 1e-12);
  EXPECT_NEAR(rects.back().x, prev.x + 2.0, 1e-12);
}
