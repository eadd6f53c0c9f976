#include "bevtrack/track.h"

#include <chrono>
#include <cstdio>
#include <spdlog/spdlog.h>

#include "bevtrack/errors.h"
#include "bevtrack/rpn2d.h"
#include "bevtrack/sim3d.h"

namespace bevtrack {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int oracle_pick(std::span<const Rect> rects, const Rect& gt) {
  int best = 0;
  double best_iou = -1.0, best_dist = 0.0;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const double iou = oriented_iou(rects[i], gt);
    const double dist = center_distance(rects[i].pose(), gt.pose());
    if (iou > best_iou || (iou == best_iou && dist < best_dist)) {
      best = static_cast<int>(i);
      best_iou = iou;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

const char* to_string(SearchMode m) {
  switch (m) {
    case SearchMode::kRpn: return "rpn";
    case SearchMode::kKalman: return "kf";
    case SearchMode::kParticle: return "pf";
    case SearchMode::kExhaustive: return "exhaustive";
  }
  return "?";
}

SearchMode search_mode_from_string(const std::string& s) {
  if (s == "rpn") return SearchMode::kRpn;
  if (s == "kf") return SearchMode::kKalman;
  if (s == "pf") return SearchMode::kParticle;
  if (s == "exhaustive") return SearchMode::kExhaustive;
  throw InvalidArgument("unknown search mode: " + s);
}

const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kAll: return "all";
    case Aggregation::kFirstOnly: return "first";
    case Aggregation::kPrevOnly: return "prev";
    case Aggregation::kFirstAndPrev: return "first_prev";
  }
  return "?";
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "all") return Aggregation::kAll;
  if (s == "first") return Aggregation::kFirstOnly;
  if (s == "prev") return Aggregation::kPrevOnly;
  if (s == "first_prev") return Aggregation::kFirstAndPrev;
  throw InvalidArgument("unknown aggregation: " + s);
}

Tracker::Tracker(const Networks<float>* nets, const TrackerConfig& cfg) : nets_(nets), cfg_(cfg), rng_(cfg.seed) {
  if (cfg.topk < 1) throw InvalidArgument("Tracker: topk must be >= 1");
  cfg_.bev.validate();
  const bool needs_rpn = cfg.search == SearchMode::kRpn;
  const bool needs_shape = cfg.selector == Selector::kSiamese;
  if ((needs_rpn || needs_shape) && nets == nullptr) {
    throw InvalidArgument("Tracker: this configuration needs trained networks");
  }
}

void Tracker::init(const PointCloud& frame0, const Box3d& gt0) {
  spec_ = gt0.spec;
  y_center_ = gt0.y_center;
  prev_pose_ = gt0.pose;
  history_.assign(1, crop_points_in_box(frame0, gt0));
  model_pc_ = history_.front();
  if (model_pc_.empty()) spdlog::warn("tracker init: ground-truth box holds no points, model starts empty");
  kf_ = kalman_init(gt0.pose, cfg_.kalman);
  particles_ = particle_init(gt0.pose, cfg_.topk);
  particle_scores_.assign(cfg_.topk, 1.0);
  initialized_ = true;
}

std::vector<Rect> Tracker::propose(const PointCloud& frame, const Box3d* gt, StepResult& out) {
  switch (cfg_.search) {
    case SearchMode::kRpn: {
      auto t0 = Clock::now();
      const auto search = rasterize_bev(frame, prev_pose_, y_center_, cfg_.bev.search_extent, cfg_.bev.search_px,
                                        cfg_.bev);
      const auto model = rasterize_bev(model_pc_, PoseBev{}, 0.0, cfg_.bev.model_extent, cfg_.bev.model_px, cfg_.bev);
      out.ms_raster = ms_since(t0);
      t0 = Clock::now();
      const auto& rpn = nets_->rpn;
      const auto result = rpn.forward(rpn.embed(model), rpn.embed(search));
      const auto grid = build_anchor_grid(prev_pose_, spec_, search, rpn.config());
      const auto proposals = decode_and_rank(RpnNet<float>::scores(result), grid, cfg_.window_weight, cfg_.topk);
      std::vector<Rect> rects;
      for (const auto& p : proposals) rects.push_back(p.rect);
      out.ms_propose = ms_since(t0);
      return rects;
    }
    case SearchMode::kKalman: {
      const auto t0 = Clock::now();
      auto kp = kalman_propose(kf_, spec_, cfg_.topk, cfg_.kalman, rng_);
      kf_predicted_ = kp.predicted;
      out.ms_propose = ms_since(t0);
      return kp.rects;
    }
    case SearchMode::kParticle: {
      const auto t0 = Clock::now();
      auto ps = particle_step(particles_, particle_scores_, spec_, cfg_.particle, rng_);
      particles_ = std::move(ps.set);
      out.ms_propose = ms_since(t0);
      return ps.rects;
    }
    case SearchMode::kExhaustive: {
      if (gt == nullptr) throw InvalidArgument("exhaustive search needs the ground truth");
      const auto t0 = Clock::now();
      auto rects = exhaustive_propose(prev_pose_, gt->pose, spec_, cfg_.grid);
      out.ms_propose = ms_since(t0);
      return rects;
    }
  }
  return {};
}

std::vector<double> Tracker::siamese_scores(const PointCloud& frame, std::span<const Rect> rects) {
  std::vector<double> scores(rects.size(), -1.0);
  if (model_pc_.empty()) return scores;
  const auto model_latent = latent_values(nets_->shape.encode(resample_fixed(model_pc_, rng_)));
  std::vector<ShapeSample> shapes;
  shapes.reserve(rects.size());
  for (const auto& r : rects) {
    const auto crop = crop_points_in_box(frame, lift_to_3d(r, spec_, y_center_));
    shapes.push_back(crop.empty() ? ShapeSample{} : resample_fixed(crop, rng_));
  }
  return rank_candidates(nets_->shape, model_latent, shapes).scores;
}

StepResult Tracker::step(const PointCloud& frame, const Box3d* gt) {
  if (!initialized_) throw InvalidArgument("Tracker::step before init");
  StepResult out;
  const auto rects = propose(frame, gt, out);
  out.candidates = static_cast<int>(rects.size());

  const auto t0 = Clock::now();
  int pick = 0;
  std::vector<double> scores(rects.size(), 0.0);
  if (cfg_.selector == Selector::kOracle) {
    if (gt == nullptr) throw InvalidArgument("oracle selector needs the ground truth");
    const Rect g = project_to_bev(*gt);
    for (std::size_t i = 0; i < rects.size(); ++i) scores[i] = oriented_iou(rects[i], g);
    pick = oracle_pick(rects, g);
  } else if (rects.size() > 1) {
    scores = siamese_scores(frame, rects);
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[pick]) pick = static_cast<int>(i);
    }
    if (scores[pick] <= -1.0) out.fallback = true;
  } else {
    // A single proposal needs no ranking.
    scores[0] = 1.0;
  }
  out.ms_rank = ms_since(t0);
  out.score = scores[pick];

  const Rect& winner = rects[pick];
  prev_pose_ = winner.pose();
  out.prediction = lift_to_3d(winner, spec_, y_center_);
  history_.push_back(crop_points_in_box(frame, out.prediction));
  model_pc_ = aggregate_model(cfg_.aggregation, history_);

  if (cfg_.search == SearchMode::kKalman) kf_ = kalman_update(kf_predicted_, prev_pose_, cfg_.kalman);
  if (cfg_.search == SearchMode::kParticle) particle_scores_ = scores;
  if (cfg_.record_proposals) out.proposals = rects;
  return out;
}

TrackletResult run_tracklet(const Tracklet& tracklet, const Networks<float>* nets, const TrackerConfig& cfg) {
  if (tracklet.frames.size() < 2 || tracklet.gt.size() != tracklet.frames.size()) {
    throw InvalidArgument("run_tracklet: need at least two frames with one box each");
  }
  Tracker tracker(nets, cfg);
  tracker.init(tracklet.frames[0], tracklet.gt[0]);
  TrackletResult r;
  r.id = tracklet.id;
  for (std::size_t t = 1; t < tracklet.frames.size(); ++t) {
    auto s = tracker.step(tracklet.frames[t], &tracklet.gt[t]);
    r.predictions.push_back(s.prediction);
    r.ground_truth.push_back(tracklet.gt[t]);
    r.scores.push_back(s.score);
    r.candidates.push_back(s.candidates);
    r.fallbacks.push_back(s.fallback);
    r.ms_raster.push_back(s.ms_raster);
    r.ms_propose.push_back(s.ms_propose);
    r.ms_rank.push_back(s.ms_rank);
    if (cfg.record_proposals) r.proposals.push_back(std::move(s.proposals));
  }
  return r;
}

std::string results_csv_header() { return "tracklet_id,frame,x,z,theta,w,h,l,score,candidates,ms_raster,ms_propose,ms_rank\n"; }

std::string results_csv_rows(const TrackletResult& r) {
  std::string out;
  char buf[512];
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    const Box3d& b = r.predictions[i];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f,%.4f,%.4f,%.4f,%.6f,%d,%.3f,%.3f,%.3f\n", r.id.c_str(),
                  i + 1, b.pose.x, b.pose.z, b.pose.theta, b.spec.w, b.spec.h, b.spec.l, r.scores[i], r.candidates[i],
                  r.ms_raster[i], r.ms_propose[i], r.ms_rank[i]);
    out += buf;
  }
  return out;
}

}  // namespace bevtrack
