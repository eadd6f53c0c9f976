#include "bevtrack/search.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "bevtrack/errors.h"

namespace bevtrack {

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

Mat5 transition() {
  Mat5 f = Mat5::Identity();
  f(0, 3) = 1.0;
  f(1, 4) = 1.0;
  return f;
}

Rect to_rect(double x, double z, double theta, const BoxSpec& spec) {
  return {x, z, normalize_angle(theta), spec.w, spec.l};
}

int steps_for(double half_range, double step) {
  return static_cast<int>(std::floor(half_range / step + 1e-9));
}

}  // namespace

KalmanState kalman_init(const PoseBev& pose, const KalmanConfig& cfg) {
  KalmanState s;
  s.mean << pose.x, pose.z, pose.theta, 0.0, 0.0;
  s.cov = cfg.initial_std.cwiseProduct(cfg.initial_std).asDiagonal();
  return s;
}

KalmanState kalman_predict(const KalmanState& state, const KalmanConfig& cfg) {
  const Mat5 f = transition();
  KalmanState p;
  p.mean = f * state.mean;
  p.mean(2) = normalize_angle(p.mean(2));
  const Mat5 q = cfg.process_std.cwiseProduct(cfg.process_std).asDiagonal();
  p.cov = f * state.cov * f.transpose() + q;
  p.cov = 0.5 * (p.cov + p.cov.transpose());
  return p;
}

KalmanState kalman_update(const KalmanState& predicted, const PoseBev& observed, const KalmanConfig& cfg) {
  Eigen::Matrix<double, 3, 5> h = Eigen::Matrix<double, 3, 5>::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = 1.0;
  const Eigen::Matrix3d r = cfg.measurement_std.cwiseProduct(cfg.measurement_std).asDiagonal();
  Eigen::Vector3d innov(observed.x - predicted.mean(0), observed.z - predicted.mean(1),
                        normalize_angle(observed.theta - predicted.mean(2)));
  const Eigen::Matrix3d s = h * predicted.cov * h.transpose() + r;
  const Eigen::Matrix<double, 5, 3> k = predicted.cov * h.transpose() * s.inverse();
  KalmanState out;
  out.mean = predicted.mean + k * innov;
  out.mean(2) = normalize_angle(out.mean(2));
  // Joseph form keeps the covariance symmetric positive semi-definite.
  const Mat5 ikh = Mat5::Identity() - k * h;
  out.cov = ikh * predicted.cov * ikh.transpose() + k * r * k.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

KalmanProposals kalman_propose(const KalmanState& state, const BoxSpec& spec, int count, const KalmanConfig& cfg,
                               Rng& rng) {
  if (count < 1) throw InvalidArgument("kalman_propose: count must be >= 1");
  KalmanProposals out;
  out.predicted = kalman_predict(state, cfg);
  const Eigen::Vector3d mean = out.predicted.mean.head<3>();
  out.rects.push_back(to_rect(mean(0), mean(1), mean(2), spec));
  if (count == 1) return out;

  const Eigen::Matrix3d cov = out.predicted.cov.topLeftCorner<3, 3>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Matrix3d root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 1; i < count; ++i) {
    Eigen::Vector3d e(n01(rng), n01(rng), n01(rng));
    const Eigen::Vector3d x = mean + root * e;
    out.rects.push_back(to_rect(x(0), x(1), x(2), spec));
  }
  return out;
}

ParticleSet particle_init(const PoseBev& pose, int count) {
  if (count < 1) throw InvalidArgument("particle_init: count must be >= 1");
  return {std::vector<PoseBev>(count, pose), std::vector<double>(count, 1.0 / count)};
}

std::vector<int> systematic_resample(std::span<const double> weights, Rng& rng) {
  const int n = static_cast<int>(weights.size());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (n == 0 || !(total > 0.0)) throw InvalidArgument("systematic_resample: weights must have positive mass");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  std::vector<int> idx(n);
  double cum = weights[0] / total;
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double pos = (u + i) / n;
    while (pos > cum && j < n - 1) {
      ++j;
      cum += weights[j] / total;
    }
    idx[i] = j;
  }
  return idx;
}

double effective_sample_size(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double sq = 0.0;
  for (double w : weights) sq += (w / total) * (w / total);
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

ParticleStep particle_step(const ParticleSet& ps, std::span<const double> scores, const BoxSpec& spec,
                           const ParticleConfig& cfg, Rng& rng) {
  const std::size_t n = ps.particles.size();
  if (n == 0) throw InvalidArgument("particle_step: empty particle set");
  if (scores.size() != n) throw InvalidArgument("particle_step: score count must equal particle count");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::max(scores[i], 0.0) + cfg.weight_floor;
  const auto idx = systematic_resample(w, rng);

  ParticleStep out;
  out.set.particles.reserve(n);
  out.set.weights.assign(n, 1.0 / static_cast<double>(n));
  std::normal_distribution<double> nxz(0.0, cfg.sigma_xz);
  std::normal_distribution<double> nth(0.0, cfg.sigma_theta);
  for (std::size_t i = 0; i < n; ++i) {
    PoseBev p = ps.particles[idx[i]];
    p.x += nxz(rng);
    p.z += nxz(rng);
    p.theta = normalize_angle(p.theta + nth(rng));
    out.set.particles.push_back(p);
    out.rects.push_back(to_rect(p.x, p.z, p.theta, spec));
  }
  return out;
}

std::size_t exhaustive_grid_count(const ExhaustiveGrid& grid) {
  const std::size_t nxz = 2 * steps_for(grid.half_range_m, grid.step_m) + 1;
  const std::size_t nth = 2 * steps_for(grid.half_range_theta, grid.step_theta) + 1;
  return nxz * nxz * nth;
}

std::vector<Rect> exhaustive_propose(const PoseBev& prev, const PoseBev& gt, const BoxSpec& spec,
                                     const ExhaustiveGrid& grid) {
  const int sxz = steps_for(grid.half_range_m, grid.step_m);
  const int sth = steps_for(grid.half_range_theta, grid.step_theta);
  std::vector<Rect> out;
  out.reserve(exhaustive_grid_count(grid) + 1);
  out.push_back(to_rect(gt.x, gt.z, gt.theta, spec));
  for (int ix = -sxz; ix <= sxz; ++ix) {
    for (int iz = -sxz; iz <= sxz; ++iz) {
      for (int it = -sth; it <= sth; ++it) {
        out.push_back(to_rect(prev.x + ix * grid.step_m, prev.z + iz * grid.step_m,
                              prev.theta + it * grid.step_theta, spec));
      }
    }
  }
  return out;
}

}  // namespace bevtrack
