#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace bevtrack {

// Object dimensions in meters. Constant along a tracklet.
struct BoxSpec {
  double w = 0.0;  // across heading
  double l = 0.0;  // along heading
  double h = 0.0;  // vertical
};

// Planar pose in the ground plane. Heading direction in world (x, z) is
// (cos theta, sin theta).
struct PoseBev {
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;
};

// Oriented footprint of a box on the ground plane.
struct Rect {
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double w = 0.0;
  double l = 0.0;

  PoseBev pose() const { return {x, z, theta}; }
  bool operator==(const Rect&) const = default;
};

struct Box3d {
  PoseBev pose;
  BoxSpec spec;
  double y_center = 0.0;
};

inline bool operator==(const PoseBev& a, const PoseBev& b) {
  return a.x == b.x && a.z == b.z && a.theta == b.theta;
}
inline bool operator==(const BoxSpec& a, const BoxSpec& b) {
  return a.w == b.w && a.l == b.l && a.h == b.h;
}
inline bool operator==(const Box3d& a, const Box3d& b) {
  return a.pose == b.pose && a.spec == b.spec && a.y_center == b.y_center;
}

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Point3&) const = default;
  auto operator<=>(const Point3&) const = default;
};

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

using PointCloud = std::vector<Point3>;
using Rng = std::mt19937_64;

inline constexpr std::size_t kShapePoints = 2048;

// A candidate or model shape: exactly kShapePoints points in the box canonical
// frame (origin at the box center, +x along heading, +y up).
struct ShapeSample {
  std::vector<Point3> points;
};

// Wraps to (-pi, pi].
double normalize_angle(double a);

Rect project_to_bev(const Box3d& box);
Box3d lift_to_3d(const Rect& rect, const BoxSpec& spec, double y_center);

// Corners in counter-clockwise order (in the x-z plane).
std::array<Vec2, 4> rect_corners(const Rect& r);

// Area of a simple polygon given in order; positive for counter-clockwise.
double polygon_area(std::span<const Vec2> poly);

// Sutherland-Hodgman clip of `subject` against a convex counter-clockwise
// `clip` polygon.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

bool rect_contains(const Rect& r, Vec2 p);
double oriented_iou(const Rect& a, const Rect& b);

double center_distance(const PoseBev& a, const PoseBev& b);

// exp(-d^2 / (2 sigma^2)). Throws InvalidArgument for sigma <= 0.
double gaussian_score(double d, double sigma);

// World point to the canonical frame of `box`, and back.
Point3 to_box_frame(const Box3d& box, const Point3& p);
Point3 from_box_frame(const Box3d& box, const Point3& p);

bool box_contains_local(const BoxSpec& spec, const Point3& local);

// Points inside the (closed) box, expressed in its canonical frame.
PointCloud crop_points_in_box(std::span<const Point3> pc, const Box3d& box);

// Uniformly subsamples (without replacement) or pads with uniform duplicates to
// exactly n points. Throws EmptyShape on empty input.
ShapeSample resample_fixed(std::span<const Point3> pc, Rng& rng, std::size_t n = kShapePoints);

// Sum of both directed sums of nearest-neighbour squared distances.
double chamfer(std::span<const Point3> a, std::span<const Point3> b);

enum class Aggregation { kPrevOnly, kFirstOnly, kFirstAndPrev, kAll };

PointCloud aggregate_model(Aggregation strategy, std::span<const PointCloud> history);

}  // namespace bevtrack
