#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "bevtrack/geom.h"

namespace bevtrack {

// Constant-velocity Kalman filter over (x, z, theta, vx, vz); velocities are
// in meters per frame.
struct KalmanConfig {
  Eigen::Matrix<double, 5, 1> process_std{0.1, 0.1, 0.034906585039886591, 0.2, 0.2};  // 2 deg
  Eigen::Matrix<double, 3, 1> measurement_std{0.2, 0.2, 0.052359877559829883};       // 3 deg
  Eigen::Matrix<double, 5, 1> initial_std{0.1, 0.1, 0.034906585039886591, 0.5, 0.5};
};

struct KalmanState {
  Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
  Eigen::Matrix<double, 5, 5> cov = Eigen::Matrix<double, 5, 5>::Zero();
};

KalmanState kalman_init(const PoseBev& pose, const KalmanConfig& cfg);
KalmanState kalman_predict(const KalmanState& state, const KalmanConfig& cfg);
// Measurement update with an observed pose (the tracker's selection).
KalmanState kalman_update(const KalmanState& predicted, const PoseBev& observed, const KalmanConfig& cfg);

struct KalmanProposals {
  KalmanState predicted;
  std::vector<Rect> rects;
};

// Predicts one frame ahead; the first proposal is the predicted mean, the
// rest are drawn from the predicted Gaussian over (x, z, theta).
KalmanProposals kalman_propose(const KalmanState& state, const BoxSpec& spec, int count, const KalmanConfig& cfg,
                               Rng& rng);

struct ParticleConfig {
  double sigma_xz = 0.3;
  double sigma_theta = 0.052359877559829883;  // 3 deg
  double weight_floor = 1e-6;
};

struct ParticleSet {
  std::vector<PoseBev> particles;
  std::vector<double> weights;
};

ParticleSet particle_init(const PoseBev& pose, int count);

struct ParticleStep {
  ParticleSet set;
  std::vector<Rect> rects;
};

// Reweights by max(score, 0) + floor, resamples systematically, then diffuses.
// The returned set carries uniform weights and the diffused particles.
ParticleStep particle_step(const ParticleSet& ps, std::span<const double> scores, const BoxSpec& spec,
                           const ParticleConfig& cfg, Rng& rng);

// Indices drawn by systematic resampling of normalized weights.
std::vector<int> systematic_resample(std::span<const double> weights, Rng& rng);

double effective_sample_size(std::span<const double> weights);

struct ExhaustiveGrid {
  double half_range_m = 2.0;
  double step_m = 0.25;
  double half_range_theta = 0.17453292519943295;  // 10 deg
  double step_theta = 0.043633231299858237;       // 2.5 deg
};

// Ground truth first, followed by the uniform grid around `prev` in x-major,
// then z, then heading order.
std::vector<Rect> exhaustive_propose(const PoseBev& prev, const PoseBev& gt, const BoxSpec& spec,
                                     const ExhaustiveGrid& grid = {});

std::size_t exhaustive_grid_count(const ExhaustiveGrid& grid);

}  // namespace bevtrack
