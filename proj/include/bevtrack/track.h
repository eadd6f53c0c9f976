#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bevtrack/bev.h"
#include "bevtrack/dataset.h"
#include "bevtrack/networks.h"
#include "bevtrack/search.h"

namespace bevtrack {

enum class SearchMode { kRpn, kKalman, kParticle, kExhaustive };

// kSiamese ranks candidates with the 3D network; kOracle picks the candidate
// with the highest IoU against the ground truth (diagnostic only).
enum class Selector { kSiamese, kOracle };

const char* to_string(SearchMode m);
SearchMode search_mode_from_string(const std::string& s);
const char* to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);

struct TrackerConfig {
  SearchMode search = SearchMode::kRpn;
  int topk = 16;  // candidates per frame (particles for kParticle)
  Aggregation aggregation = Aggregation::kAll;
  Selector selector = Selector::kSiamese;
  BevConfig bev;
  KalmanConfig kalman;
  ParticleConfig particle;
  ExhaustiveGrid grid;
  double window_weight = 0.3;
  bool record_proposals = false;
  std::uint64_t seed = 1;
};

struct StepResult {
  Box3d prediction;
  double score = 0.0;
  int candidates = 0;
  bool fallback = false;  // no candidate held any point
  double ms_raster = 0.0, ms_propose = 0.0, ms_rank = 0.0;
  std::vector<Rect> proposals;  // generation order, when recorded
};

// Online tracker for one object. `nets` may be null when neither the RPN nor
// the Siamese selector is needed (filter baselines with the oracle selector).
class Tracker {
 public:
  Tracker(const Networks<float>* nets, const TrackerConfig& cfg);

  void init(const PointCloud& frame0, const Box3d& gt0);
  // `gt` is consulted only by exhaustive search and the oracle selector.
  StepResult step(const PointCloud& frame, const Box3d* gt = nullptr);

  const PointCloud& model() const { return model_pc_; }
  const PoseBev& previous_pose() const { return prev_pose_; }
  const BoxSpec& spec() const { return spec_; }
  double y_center() const { return y_center_; }

 private:
  std::vector<Rect> propose(const PointCloud& frame, const Box3d* gt, StepResult& out);
  std::vector<double> siamese_scores(const PointCloud& frame, std::span<const Rect> rects);

  const Networks<float>* nets_;
  TrackerConfig cfg_;
  Rng rng_;
  bool initialized_ = false;
  BoxSpec spec_;
  double y_center_ = 0.0;
  PoseBev prev_pose_;
  std::vector<PointCloud> history_;
  PointCloud model_pc_;
  KalmanState kf_;
  KalmanState kf_predicted_;
  ParticleSet particles_;
  std::vector<double> particle_scores_;
};

struct TrackletResult {
  std::string id;
  std::vector<Box3d> predictions;  // frames 1..T-1
  std::vector<Box3d> ground_truth;  // frames 1..T-1
  std::vector<double> scores;
  std::vector<int> candidates;
  std::vector<bool> fallbacks;
  std::vector<double> ms_raster, ms_propose, ms_rank;
  std::vector<std::vector<Rect>> proposals;  // filled when recording
};

// Throws InvalidArgument for fewer than two frames.
TrackletResult run_tracklet(const Tracklet& tracklet, const Networks<float>* nets, const TrackerConfig& cfg);

std::string results_csv_header();
std::string results_csv_rows(const TrackletResult& r);

}  // namespace bevtrack
