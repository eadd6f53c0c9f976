#include <gtest/gtest.h>

#include "bevtrack/dataset.h"
#include "bevtrack/errors.h"
#include "bevtrack/evalrep.h"
#include "bevtrack/rpn2d.h"
#include "bevtrack/track.h"

using namespace bevtrack;

namespace {

Tracklet synthetic_tracklet(std::uint64_t seed, int frames = 6) {
  SceneConfig sc;
  sc.n_tracklets = 1;
  sc.frames = frames;
  sc.seed = seed;
  return generate_synthetic(sc).tracklets.front();
}

const Networks<float>& shared_nets() {
  static Networks<float> nets = [] {
    Networks<float> n(NetworkConfig{});
    n.store.set_requires_grad(false);
    return n;
  }();
  return nets;
}

}  // namespace

TEST(Tracker, InitTakesModelAndSizeFromFirstBox) {
  const auto tl = synthetic_tracklet(1);
  Tracker t(&shared_nets(), TrackerConfig{});
  t.init(tl.frames[0], tl.gt[0]);
  EXPECT_EQ(t.model(), crop_points_in_box(tl.frames[0], tl.gt[0]));
  EXPECT_EQ(t.spec(), tl.gt[0].spec);
  EXPECT_EQ(t.previous_pose(), tl.gt[0].pose);
  EXPECT_THROW(Tracker(&shared_nets(), TrackerConfig{}).step(tl.frames[1]), InvalidArgument);
}

TEST(Tracker, EmptyInitialModelDegradesGracefully) {
  auto tl = synthetic_tracklet(2, 3);
  Box3d far = tl.gt[0];
  far.pose.x += 500.0;
  Tracker t(&shared_nets(), TrackerConfig{});
  t.init(tl.frames[0], far);
  EXPECT_TRUE(t.model().empty());
  const auto s = t.step(tl.frames[1]);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.candidates, 16);
}

TEST(Tracker, TopOneFollowsTheBestProposal) {
  const auto tl = synthetic_tracklet(3, 3);
  TrackerConfig cfg;
  cfg.topk = 1;
  Tracker t(&shared_nets(), cfg);
  t.init(tl.frames[0], tl.gt[0]);
  const auto s = t.step(tl.frames[1]);

  // Recompute the RPN's first proposal independently of the tracker.
  const auto& nets = shared_nets();
  BevConfig bev;
  const auto search = rasterize_bev(tl.frames[1], tl.gt[0].pose, tl.gt[0].y_center, 5.0, 255, bev);
  const auto model = rasterize_bev(crop_points_in_box(tl.frames[0], tl.gt[0]), PoseBev{}, 0.0, 2.5, 127, bev);
  const auto out = nets.rpn.forward(nets.rpn.embed(model), nets.rpn.embed(search));
  const auto grid = build_anchor_grid(tl.gt[0].pose, tl.gt[0].spec, search);
  const auto top = decode_and_rank(RpnNet<float>::scores(out), grid, 0.3, 1).front();
  EXPECT_EQ(project_to_bev(s.prediction), top.rect);
}

TEST(Tracker, ExhaustiveOracleIsPerfectOnAStationaryObject) {
  auto tl = synthetic_tracklet(4, 5);
  for (std::size_t i = 1; i < tl.gt.size(); ++i) {
    tl.gt[i] = tl.gt[0];
    tl.frames[i] = tl.frames[0];
  }
  TrackerConfig cfg;
  cfg.search = SearchMode::kExhaustive;
  cfg.selector = Selector::kOracle;
  const auto r = run_tracklet(tl, nullptr, cfg);
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    EXPECT_NEAR(oriented_iou(project_to_bev(r.predictions[i]), project_to_bev(r.ground_truth[i])), 1.0, 1e-9);
  }
}

TEST(Tracker, AllAggregationGrowsTheModel) {
  const auto tl = synthetic_tracklet(5, 6);
  TrackerConfig cfg;
  cfg.search = SearchMode::kKalman;
  cfg.selector = Selector::kOracle;
  Tracker t(nullptr, cfg);
  t.init(tl.frames[0], tl.gt[0]);
  std::size_t last = t.model().size();
  for (std::size_t i = 1; i < tl.frames.size(); ++i) {
    t.step(tl.frames[i], &tl.gt[i]);
    EXPECT_GE(t.model().size(), last);
    last = t.model().size();
  }
}

TEST(Tracker, OutputContractAndRigidBoxes) {
  const auto tl = synthetic_tracklet(6, 5);
  TrackerConfig cfg;
  cfg.topk = 4;
  const auto r = run_tracklet(tl, &shared_nets(), cfg);
  ASSERT_EQ(r.predictions.size(), tl.frames.size() - 1);
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    EXPECT_EQ(r.predictions[i].spec, tl.gt[0].spec);
    EXPECT_EQ(r.predictions[i].y_center, tl.gt[0].y_center);
    EXPECT_EQ(r.candidates[i], 4);
  }
  const std::string csv = results_csv_header() + results_csv_rows(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "tracklet_id,frame,x,z,theta,w,h,l,score,candidates,ms_raster,ms_propose,ms_rank");
}

TEST(Tracker, DeterministicForAFixedSeed) {
  const auto tl = synthetic_tracklet(7, 5);
  for (SearchMode m : {SearchMode::kRpn, SearchMode::kKalman, SearchMode::kParticle}) {
    TrackerConfig cfg;
    cfg.search = m;
    cfg.topk = 8;
    const auto a = run_tracklet(tl, &shared_nets(), cfg);
    const auto b = run_tracklet(tl, &shared_nets(), cfg);
    EXPECT_EQ(a.predictions, b.predictions) << to_string(m);
    EXPECT_EQ(a.scores, b.scores) << to_string(m);
  }
}

TEST(Tracker, OnlineCausality) {
  // Replacing future frames must not change the predictions for the prefix.
  const auto tl = synthetic_tracklet(8, 6);
  auto altered = tl;
  std::swap(altered.frames[4], altered.frames[5]);
  altered.frames[5].clear();
  TrackerConfig cfg;
  cfg.topk = 4;
  const auto a = run_tracklet(tl, &shared_nets(), cfg);
  const auto b = run_tracklet(altered, &shared_nets(), cfg);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.predictions[i], b.predictions[i]);
}

TEST(Tracker, NeedsTwoFramesAndNetworks) {
  auto tl = synthetic_tracklet(9, 2);
  tl.frames.pop_back();
  tl.gt.pop_back();
  EXPECT_THROW(run_tracklet(tl, &shared_nets(), TrackerConfig{}), InvalidArgument);
  EXPECT_THROW(Tracker(nullptr, TrackerConfig{}), InvalidArgument);
}

TEST(SearchModeNames, RoundTrip) {
  for (SearchMode m : {SearchMode::kRpn, SearchMode::kKalman, SearchMode::kParticle, SearchMode::kExhaustive}) {
    EXPECT_EQ(search_mode_from_string(to_string(m)), m);
  }
  for (Aggregation a : {Aggregation::kAll, Aggregation::kFirstOnly, Aggregation::kPrevOnly, Aggregation::kFirstAndPrev}) {
    EXPECT_EQ(aggregation_from_string(to_string(a)), a);
  }
  EXPECT_THROW(search_mode_from_string("grid"), InvalidArgument);
}
