#include "bevtrack/experiment.h"

#include <spdlog/spdlog.h>

#include "bevtrack/errors.h"

namespace bevtrack {

Evaluation evaluate_tracker(const SequenceDataset& data, const Networks<float>* nets, const TrackerConfig& cfg) {
  TrackerConfig run_cfg = cfg;
  run_cfg.record_proposals = true;
  Evaluation ev;
  std::vector<Box3d> pred, gt;
  std::vector<std::vector<Rect>> streams;
  for (const auto& tl : data.tracklets) {
    if (tl.frames.size() < 2) continue;
    auto r = run_tracklet(tl, nets, run_cfg);
    pred.insert(pred.end(), r.predictions.begin(), r.predictions.end());
    gt.insert(gt.end(), r.ground_truth.begin(), r.ground_truth.end());
    streams.insert(streams.end(), r.proposals.begin(), r.proposals.end());
    r.proposals.clear();
    ev.results.push_back(std::move(r));
  }
  if (pred.empty()) throw InvalidArgument("evaluate_tracker: no tracklet with at least two frames");
  ev.summary = ope_metrics(pred, gt);
  int max_c = 1;
  for (const auto& s : streams) max_c = std::max<int>(max_c, static_cast<int>(s.size()));
  const auto oracle = best_proposal_curve(streams, gt, max_c).back();
  ev.oracle_success = oracle.success;
  ev.oracle_precision = oracle.precision;
  return ev;
}

ProposalCurve proposal_curve(const SequenceDataset& data, const Networks<float>* nets, const TrackerConfig& base,
                             std::span<const int> counts, const std::string& label) {
  ProposalCurve curve;
  curve.label = label;
  for (int c : counts) {
    TrackerConfig cfg = base;
    cfg.topk = c;
    const auto ev = evaluate_tracker(data, nets, cfg);
    curve.points.push_back({c, {ev.oracle_success, ev.oracle_precision}, ev.summary});
    spdlog::info("{} C={}: best proposal {} | selected {}", label, c, format_summary(curve.points.back().oracle),
                 format_summary(ev.summary));
  }
  return curve;
}

std::vector<int> candidate_counts(int max_c) {
  if (max_c < 1) throw InvalidArgument("candidate_counts: max_c must be >= 1");
  std::vector<int> out;
  for (int c = 1; c < max_c; c *= 2) out.push_back(c);
  out.push_back(max_c);
  return out;
}

}  // namespace bevtrack
