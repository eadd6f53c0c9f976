#include "bevtrack/geom.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "bevtrack/errors.h"

namespace bevtrack {

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

Rect project_to_bev(const Box3d& box) {
  return {box.pose.x, box.pose.z, normalize_angle(box.pose.theta), box.spec.w, box.spec.l};
}

Box3d lift_to_3d(const Rect& rect, const BoxSpec& spec, double y_center) {
  return {{rect.x, rect.z, normalize_angle(rect.theta)}, spec, y_center};
}

std::array<Vec2, 4> rect_corners(const Rect& r) {
  const double c = std::cos(r.theta);
  const double s = std::sin(r.theta);
  const double hl = 0.5 * r.l;
  const double hw = 0.5 * r.w;
  const std::array<Vec2, 4> local{{{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}};
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {r.x + c * local[i].x - s * local[i].z, r.z + s * local[i].x + c * local[i].z};
  }
  return out;
}

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    acc += p.x * q.z - q.x * p.z;
  }
  return 0.5 * acc;
}

namespace {

double cross(Vec2 a, Vec2 b, Vec2 p) {
  return (b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x);
}

Vec2 intersect(Vec2 p, Vec2 q, Vec2 a, Vec2 b) {
  const double dp = cross(a, b, p);
  const double dq = cross(a, b, q);
  const double t = dp / (dp - dq);
  return {p.x + t * (q.x - p.x), p.z + t * (q.z - p.z)};
}

}  // namespace

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % clip.size()];
    std::vector<Vec2> in;
    in.swap(out);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2 p = in[i];
      const Vec2 q = in[(i + 1) % in.size()];
      const bool p_in = cross(a, b, p) >= 0.0;
      const bool q_in = cross(a, b, q) >= 0.0;
      if (p_in) out.push_back(p);
      if (p_in != q_in) out.push_back(intersect(p, q, a, b));
    }
  }
  return out;
}

bool rect_contains(const Rect& r, Vec2 p) {
  const double c = std::cos(r.theta);
  const double s = std::sin(r.theta);
  const double dx = p.x - r.x;
  const double dz = p.z - r.z;
  const double along = c * dx + s * dz;
  const double across = -s * dx + c * dz;
  return std::abs(along) <= 0.5 * r.l && std::abs(across) <= 0.5 * r.w;
}

double oriented_iou(const Rect& a, const Rect& b) {
  // Quick reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(a.w, a.l);
  const double rb = 0.5 * std::hypot(b.w, b.l);
  if (std::hypot(a.x - b.x, a.z - b.z) > ra + rb) return 0.0;

  const auto ca = rect_corners(a);
  const auto cb = rect_corners(b);
  const auto inter_poly = clip_convex(ca, cb);
  const double inter = std::max(0.0, polygon_area(inter_poly));
  const double uni = a.w * a.l + b.w * b.l - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const PoseBev& a, const PoseBev& b) {
  return std::hypot(a.x - b.x, a.z - b.z);
}

double gaussian_score(double d, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_score: sigma must be > 0");
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

Point3 to_box_frame(const Box3d& box, const Point3& p) {
  const double c = std::cos(box.pose.theta);
  const double s = std::sin(box.pose.theta);
  const double dx = p.x - box.pose.x;
  const double dz = p.z - box.pose.z;
  return {c * dx + s * dz, p.y - box.y_center, -s * dx + c * dz};
}

Point3 from_box_frame(const Box3d& box, const Point3& p) {
  const double c = std::cos(box.pose.theta);
  const double s = std::sin(box.pose.theta);
  return {box.pose.x + c * p.x - s * p.z, box.y_center + p.y, box.pose.z + s * p.x + c * p.z};
}

bool box_contains_local(const BoxSpec& spec, const Point3& local) {
  return std::abs(local.x) <= 0.5 * spec.l && std::abs(local.y) <= 0.5 * spec.h &&
         std::abs(local.z) <= 0.5 * spec.w;
}

PointCloud crop_points_in_box(std::span<const Point3> pc, const Box3d& box) {
  PointCloud out;
  const double c = std::cos(box.pose.theta);
  const double s = std::sin(box.pose.theta);
  const double r2 = 0.25 * (box.spec.l * box.spec.l + box.spec.w * box.spec.w);
  for (const Point3& p : pc) {
    const double dx = p.x - box.pose.x;
    const double dz = p.z - box.pose.z;
    if (dx * dx + dz * dz > r2 * (1.0 + 1e-9) + 1e-12) continue;
    const Point3 local{c * dx + s * dz, p.y - box.y_center, -s * dx + c * dz};
    if (box_contains_local(box.spec, local)) out.push_back(local);
  }
  return out;
}

ShapeSample resample_fixed(std::span<const Point3> pc, Rng& rng, std::size_t n) {
  if (pc.empty()) throw EmptyShape("resample_fixed: empty point cloud");
  ShapeSample out;
  out.points.reserve(n);
  if (pc.size() >= n) {
    std::vector<std::size_t> idx(pc.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n slots become a uniform subset.
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.points.push_back(pc[idx[i]]);
    }
  } else {
    out.points.assign(pc.begin(), pc.end());
    std::uniform_int_distribution<std::size_t> pick(0, pc.size() - 1);
    while (out.points.size() < n) out.points.push_back(pc[pick(rng)]);
  }
  return out;
}

namespace {

double directed_sum(std::span<const Point3> from, std::span<const Point3> to) {
  double total = 0.0;
  for (const Point3& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point3& q : to) {
      const double dx = p.x - q.x;
      const double dy = p.y - q.y;
      const double dz = p.z - q.z;
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    total += best;
  }
  return total;
}

}  // namespace

double chamfer(std::span<const Point3> a, std::span<const Point3> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("chamfer: empty point cloud");
  return directed_sum(a, b) + directed_sum(b, a);
}

PointCloud aggregate_model(Aggregation strategy, std::span<const PointCloud> history) {
  if (history.empty()) throw InvalidArgument("aggregate_model: empty history");
  PointCloud out;
  auto append = [&out](const PointCloud& pc) { out.insert(out.end(), pc.begin(), pc.end()); };
  switch (strategy) {
    case Aggregation::kPrevOnly:
      append(history.back());
      break;
    case Aggregation::kFirstOnly:
      append(history.front());
      break;
    case Aggregation::kFirstAndPrev:
      append(history.front());
      if (history.size() > 1) append(history.back());
      break;
    case Aggregation::kAll:
      for (const PointCloud& pc : history) append(pc);
      break;
  }
  return out;
}

}  // namespace bevtrack
