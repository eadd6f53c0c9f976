#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "bevtrack/errors.h"
#include "bevtrack/evalrep.h"
#include "bevtrack/experiment.h"

using namespace bevtrack;

namespace {

Box3d box_at(double x, double z, double theta = 0.0) {
  Box3d b;
  b.pose = {x, z, theta};
  b.spec = {1.8, 4.0, 1.5};
  b.y_center = -1.0;
  return b;
}

// Area under the success and precision curves by direct counting.
OpeSummary ope_oracle(const std::vector<double>& ious, const std::vector<double>& dists) {
  double s = 0.0, p = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double tau = i / 100.0;
    const double delta = 2.0 * (i + 1) / 100.0;
    int sc = 0, pc = 0;
    for (std::size_t f = 0; f < ious.size(); ++f) {
      sc += ious[f] > tau;
      pc += dists[f] < delta;
    }
    s += static_cast<double>(sc) / ious.size();
    p += static_cast<double>(pc) / ious.size();
  }
  return {s, p};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Ope, PerfectTracksScoreOneHundred) {
  std::vector<Box3d> gt;
  for (int i = 0; i < 20; ++i) gt.push_back(box_at(0.3 * i, 0.1 * i, 0.01 * i));
  const auto s = ope_metrics(gt, gt);
  EXPECT_DOUBLE_EQ(s.success, 100.0);
  EXPECT_DOUBLE_EQ(s.precision, 100.0);
}

TEST(Ope, HopelessTracksScoreZero) {
  std::vector<Box3d> gt, pred;
  for (int i = 0; i < 20; ++i) {
    gt.push_back(box_at(0.3 * i, 0.0));
    pred.push_back(box_at(0.3 * i + 50.0, 0.0));
  }
  const auto s = ope_metrics(pred, gt);
  EXPECT_DOUBLE_EQ(s.success, 0.0);
  EXPECT_DOUBLE_EQ(s.precision, 0.0);
}

TEST(Ope, HandComputedThreeFrames) {
  // IoU 1, 0.5 and 0; distance 0, 1 and 4 m.
  const std::vector<double> ious{1.0, 0.5, 0.0}, dists{0.0, 1.0, 4.0};
  const auto s = ope_from_values(ious, dists);
  // Success: 100 thresholds for frame 0, 50 (0..0.49) for frame 1, none for frame 2.
  EXPECT_NEAR(s.success, 100.0 * (100 + 50) / 300.0, 1e-9);
  // Precision: frame 0 always, frame 1 for delta in (1, 2] (50 thresholds), frame 2 never.
  EXPECT_NEAR(s.precision, 100.0 * (100 + 50) / 300.0, 1e-9);
}

TEST(Ope, MatchesCountingOracleOnRandomValues) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0), d(0.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> ious(37), dists(37);
    for (auto& v : ious) v = u(rng);
    for (auto& v : dists) v = d(rng);
    const auto got = ope_from_values(ious, dists);
    const auto want = ope_oracle(ious, dists);
    EXPECT_NEAR(got.success, want.success, 1e-9);
    EXPECT_NEAR(got.precision, want.precision, 1e-9);
  }
}

TEST(Ope, RejectsMismatchedOrEmptyInput) {
  std::vector<Box3d> a{box_at(0, 0)}, b;
  EXPECT_THROW(ope_metrics(a, b), InvalidArgument);
  EXPECT_THROW(ope_metrics(b, b), InvalidArgument);
}

TEST(ProposalCurve, OracleIsMonotoneAndStartsAtTheFirstProposal) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.8);
  std::vector<Box3d> gt;
  std::vector<std::vector<Rect>> streams;
  std::vector<Box3d> first;
  for (int f = 0; f < 30; ++f) {
    gt.push_back(box_at(f * 0.5, 0.0));
    std::vector<Rect> s;
    for (int c = 0; c < 12; ++c) s.push_back(Rect{f * 0.5 + n(rng), n(rng), 0.1 * n(rng), 1.8, 4.0});
    first.push_back(lift_to_3d(s.front(), gt.back().spec, gt.back().y_center));
    streams.push_back(std::move(s));
  }
  const auto curve = best_proposal_curve(streams, gt, 12);
  ASSERT_EQ(curve.size(), 12u);
  const auto top1 = ope_metrics(first, gt);
  EXPECT_NEAR(curve[0].success, top1.success, 1e-9);
  EXPECT_NEAR(curve[0].precision, top1.precision, 1e-9);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i].success, curve[i - 1].success);
}

TEST(CandidateCounts, DoublingGridEndsAtTheMaximum) {
  EXPECT_EQ(candidate_counts(16), (std::vector<int>{1, 2, 4, 8, 16}));
  EXPECT_EQ(candidate_counts(20), (std::vector<int>{1, 2, 4, 8, 16, 20}));
  EXPECT_EQ(candidate_counts(1), (std::vector<int>{1}));
}

TEST(Report, TableHasOneDecimal) {
  const std::vector<ReportRun> runs{{"rpn (top-16)", {56.789, 71.04}}};
  EXPECT_EQ(format_summary(runs[0].summary), "56.8 / 71.0");
  const auto table = report_table(runs);
  EXPECT_NE(table.find("rpn (top-16)"), std::string::npos);
  EXPECT_NE(table.find("56.8 / 71.0"), std::string::npos);
}

TEST(Report, ArtifactsAreWellFormed) {
  ProposalCurve c;
  c.label = "kf <a&b>";
  for (int k : {1, 2, 4, 8}) c.points.push_back({k, {10.0 * k, 11.0 * k}, {5.0 * k, 6.0 * k}});
  const std::vector<ProposalCurve> curves{c};
  const std::vector<ReportRun> runs{{"kf", {1.0, 2.0}}};
  const auto dir = std::filesystem::temp_directory_path() / "bevtrack_report_test";
  std::filesystem::remove_all(dir);
  emit_report(dir, runs, curves);

  const auto csv = slurp(dir / "curves.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "label,C,success,precision,kind");
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  EXPECT_EQ(lines, 1 + 4 * 2);

  const auto svg = slurp(dir / "curves.svg");
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("kf &lt;a&amp;b&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("<a&b>"), std::string::npos);
  // Balanced elements: every opened tag is closed or self-closing.
  const std::regex open("<([a-z]+)[^>]*[^/]>"), close("</([a-z]+)>");
  const auto n_open = std::distance(std::sregex_iterator(svg.begin(), svg.end(), open), std::sregex_iterator());
  const auto n_close = std::distance(std::sregex_iterator(svg.begin(), svg.end(), close), std::sregex_iterator());
  EXPECT_EQ(n_open, n_close);

  EXPECT_NE(slurp(dir / "report.txt").find("1.0 / 2.0"), std::string::npos);
  std::filesystem::remove_all(dir);
}
