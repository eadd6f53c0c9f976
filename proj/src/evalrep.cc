#include "bevtrack/evalrep.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bevtrack/errors.h"
#include "bevtrack/io.h"

namespace bevtrack {

OpeSummary ope_from_values(std::span<const double> ious, std::span<const double> distances, const OpeConfig& cfg) {
  if (ious.size() != distances.size()) throw InvalidArgument("ope: value count mismatch");
  if (ious.empty()) throw InvalidArgument("ope: no frames");
  if (cfg.iou_steps < 1 || cfg.distance_steps < 1 || !(cfg.max_distance > 0.0)) {
    throw InvalidArgument("ope: invalid threshold configuration");
  }
  const double n = static_cast<double>(ious.size());
  OpeSummary s;
  // Thresholds 0 .. 1 - 1/steps for IoU and max/steps .. max for distance, so
  // perfect tracks score 100 and hopeless ones 0.
  for (int i = 0; i < cfg.iou_steps; ++i) {
    const double tau = static_cast<double>(i) / cfg.iou_steps;
    s.success += std::count_if(ious.begin(), ious.end(), [tau](double v) { return v > tau; }) / n;
  }
  for (int i = 1; i <= cfg.distance_steps; ++i) {
    const double delta = cfg.max_distance * i / cfg.distance_steps;
    s.precision += std::count_if(distances.begin(), distances.end(), [delta](double v) { return v < delta; }) / n;
  }
  s.success *= 100.0 / cfg.iou_steps;
  s.precision *= 100.0 / cfg.distance_steps;
  return s;
}

OpeSummary ope_metrics(std::span<const Box3d> pred, std::span<const Box3d> gt, const OpeConfig& cfg) {
  if (pred.size() != gt.size()) throw InvalidArgument("ope_metrics: prediction and ground-truth lengths differ");
  std::vector<double> ious, dists;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ious.push_back(oriented_iou(project_to_bev(pred[i]), project_to_bev(gt[i])));
    dists.push_back(center_distance(pred[i].pose, gt[i].pose));
  }
  return ope_from_values(ious, dists, cfg);
}

std::vector<OpeSummary> best_proposal_curve(std::span<const std::vector<Rect>> streams, std::span<const Box3d> gt,
                                            int max_c, const OpeConfig& cfg) {
  if (streams.size() != gt.size()) throw InvalidArgument("best_proposal_curve: stream and ground-truth lengths differ");
  if (max_c < 1) throw InvalidArgument("best_proposal_curve: max_c must be >= 1");
  const std::size_t frames = streams.size();
  // Running best per frame as C grows.
  std::vector<double> best_iou(frames, -1.0), best_dist(frames, 0.0);
  std::vector<OpeSummary> out;
  for (int c = 1; c <= max_c; ++c) {
    for (std::size_t f = 0; f < frames; ++f) {
      const auto& s = streams[f];
      if (static_cast<int>(s.size()) < c) continue;
      const Rect g = project_to_bev(gt[f]);
      const Rect& r = s[c - 1];
      const double iou = oriented_iou(r, g);
      const double dist = center_distance(r.pose(), g.pose());
      if (iou > best_iou[f] || (iou == best_iou[f] && dist < best_dist[f])) {
        best_iou[f] = iou;
        best_dist[f] = dist;
      }
    }
    out.push_back(ope_from_values(best_iou, best_dist, cfg));
  }
  return out;
}

std::string format_summary(const OpeSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f / %.1f", s.success, s.precision);
  return buf;
}

std::string report_table(std::span<const ReportRun> runs) {
  std::size_t width = 5;
  for (const auto& r : runs) width = std::max(width, r.label.size());
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s  %s\n", static_cast<int>(width), "label", "Success / Precision");
  out += buf;
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof buf, "%-*s  %s\n", static_cast<int>(width), r.label.c_str(),
                  format_summary(r.summary).c_str());
    out += buf;
  }
  return out;
}

std::string curves_csv(std::span<const ProposalCurve> curves) {
  std::string out = "label,C,success,precision,kind\n";
  char buf[256];
  for (const auto& c : curves) {
    for (const char* kind : {"oracle", "selector"}) {
      const bool oracle = kind[0] == 'o';
      for (const auto& p : c.points) {
        const auto& s = oracle ? p.oracle : p.selector;
        std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%s\n", c.label.c_str(), p.candidates, s.success, s.precision,
                      kind);
        out += buf;
      }
    }
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string curves_svg(std::span<const ProposalCurve> curves) {
  constexpr double panel_w = 420, panel_h = 300, margin = 50, gap = 40;
  const double width = 2 * (panel_w + margin) + gap;
  const double height = panel_h + 2 * margin + 20 * static_cast<double>(curves.size());
  int max_c = 1;
  for (const auto& c : curves) {
    for (const auto& p : c.points) max_c = std::max(max_c, p.candidates);
  }
  // Log-scaled candidate axis.
  const double log_max = std::log(static_cast<double>(std::max(max_c, 2)));
  auto px = [&](int panel, int c) {
    const double x0 = margin + panel * (panel_w + margin + gap);
    return x0 + panel_w * std::log(static_cast<double>(c)) / log_max;
  };
  auto py = [&](double v) { return margin + panel_h * (1.0 - v / 100.0); };

  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                width, height);
  out += buf;
  const char* titles[] = {"Success", "Precision"};
  for (int panel = 0; panel < 2; ++panel) {
    const double x0 = margin + panel * (panel_w + margin + gap);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"#444\"/>\n", x0,
                  margin, panel_w, panel_h);
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s vs candidates</text>\n",
                  x0 + panel_w / 2, margin - 10, titles[panel]);
    out += buf;
    for (int v = 0; v <= 100; v += 20) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%d</text>\n", x0 - 5, py(v) + 4,
                    v);
      out += buf;
    }
    for (int c = 1; c <= max_c; c *= 2) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%d</text>\n", px(panel, c),
                    margin + panel_h + 15, c);
      out += buf;
    }
    for (std::size_t i = 0; i < curves.size(); ++i) {
      const char* color = kPalette[i % std::size(kPalette)];
      for (int kind = 0; kind < 2; ++kind) {
        std::string pts;
        for (const auto& p : curves[i].points) {
          const auto& s = kind == 0 ? p.oracle : p.selector;
          std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(panel, p.candidates),
                        py(panel == 0 ? s.success : s.precision));
          pts += buf;
        }
        std::snprintf(buf, sizeof buf, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"%s points=\"%s\"/>\n",
                      color, kind == 0 ? "" : " stroke-dasharray=\"6,4\"", pts.c_str());
        out += buf;
      }
    }
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s (solid: best proposal, dashed: 3D Siamese)</text>\n",
                  margin, margin + panel_h + 35 + 20 * static_cast<double>(i), kPalette[i % std::size(kPalette)],
                  xml_escape(curves[i].label).c_str());
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

void emit_report(const std::filesystem::path& dir, std::span<const ReportRun> runs,
                 std::span<const ProposalCurve> curves) {
  if (runs.empty() && curves.empty()) throw InvalidArgument("emit_report: nothing to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file_atomic(dir / "report.txt", report_table(runs));
  write_file_atomic(dir / "curves.csv", curves_csv(curves));
  write_file_atomic(dir / "curves.svg", curves_svg(curves));
}

}  // namespace bevtrack
