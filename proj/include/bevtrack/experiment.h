#pragma once

#include <span>
#include <string>
#include <vector>

#include "bevtrack/dataset.h"
#include "bevtrack/evalrep.h"
#include "bevtrack/track.h"

namespace bevtrack {

struct Evaluation {
  std::vector<TrackletResult> results;
  OpeSummary summary;  // pooled over every tracked frame
  double oracle_success = 0.0, oracle_precision = 0.0;  // best proposal, when proposals were recorded
};

// Tracks every tracklet with `cfg`. Proposals are recorded so the best-proposal
// OPE of the same run is available.
Evaluation evaluate_tracker(const SequenceDataset& data, const Networks<float>* nets, const TrackerConfig& cfg);

// One tracker run per candidate count; the oracle point at C is the
// best-proposal OPE of the run that used C candidates.
ProposalCurve proposal_curve(const SequenceDataset& data, const Networks<float>* nets, const TrackerConfig& base,
                             std::span<const int> counts, const std::string& label);

// 1, 2, 4, ... below max_c, then max_c itself.
std::vector<int> candidate_counts(int max_c);

}  // namespace bevtrack
