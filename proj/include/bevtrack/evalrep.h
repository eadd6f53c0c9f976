#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bevtrack/geom.h"

namespace bevtrack {

struct OpeSummary {
  double success = 0.0;    // AUC x 100 over IoU thresholds
  double precision = 0.0;  // AUC x 100 over center-distance thresholds
};

struct OpeConfig {
  int iou_steps = 100;           // thresholds 0, 0.01, ..., 1
  double max_distance = 2.0;     // meters
  int distance_steps = 100;      // thresholds 0, 0.02, ..., 2
};

// Success counts IoU strictly above each threshold, Precision counts center
// distance strictly below. Throws InvalidArgument on length mismatch or empty
// input.
OpeSummary ope_metrics(std::span<const Box3d> pred, std::span<const Box3d> gt, const OpeConfig& cfg = {});

// Same metrics over pre-computed per-frame IoU and distance values.
OpeSummary ope_from_values(std::span<const double> ious, std::span<const double> distances,
                           const OpeConfig& cfg = {});

struct CurvePoint {
  int candidates = 0;
  OpeSummary oracle;
  OpeSummary selector;
};

struct ProposalCurve {
  std::string label;
  std::vector<CurvePoint> points;  // ascending candidate count
};

// Oracle OPE for every prefix length C = 1..max_c of the recorded proposal
// streams: per frame the max-IoU candidate among the first C proposals.
// `streams[f]` holds frame f's proposals in generation order.
std::vector<OpeSummary> best_proposal_curve(std::span<const std::vector<Rect>> streams, std::span<const Box3d> gt,
                                            int max_c, const OpeConfig& cfg = {});

struct ReportRun {
  std::string label;
  OpeSummary summary;
};

// Writes report.txt, curves.csv and curves.svg into `dir`.
void emit_report(const std::filesystem::path& dir, std::span<const ReportRun> runs,
                 std::span<const ProposalCurve> curves);

std::string format_summary(const OpeSummary& s);  // "S / P", one decimal
std::string report_table(std::span<const ReportRun> runs);
std::string curves_csv(std::span<const ProposalCurve> curves);
std::string curves_svg(std::span<const ProposalCurve> curves);

}  // namespace bevtrack
