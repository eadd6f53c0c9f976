#include "bevtrack/bev.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bevtrack/errors.h"

namespace bevtrack {

void BevConfig::validate() const {
  if (n_slices < 1) throw InvalidArgument("BevConfig: n_slices must be >= 1");
  if (!(vertical_extent > 0.0) || !(model_extent > 0.0) || !(search_extent > 0.0)) {
    throw InvalidArgument("BevConfig: extents must be positive");
  }
  if (model_px % 2 == 0 || search_px % 2 == 0) {
    throw InvalidArgument("BevConfig: pixel sizes must be odd");
  }
  if (density_saturation < 1) throw InvalidArgument("BevConfig: density_saturation must be >= 1");
}

BevImage::BevImage(int channels, int px, double extent, PoseBev origin)
    : channels_(channels),
      px_(px),
      extent_(extent),
      origin_(origin),
      data_(static_cast<std::size_t>(channels) * px * px, 0.0f) {}

Vec2 BevImage::to_crop(Vec2 world) const {
  const double c = std::cos(origin_.theta);
  const double s = std::sin(origin_.theta);
  const double dx = world.x - origin_.x;
  const double dz = world.z - origin_.z;
  return {c * dx + s * dz, -s * dx + c * dz};
}

Vec2 BevImage::from_crop(Vec2 crop) const {
  const double c = std::cos(origin_.theta);
  const double s = std::sin(origin_.theta);
  return {origin_.x + c * crop.x - s * crop.z, origin_.z + s * crop.x + c * crop.z};
}

Pixel BevImage::world_to_pixel(Vec2 world) const {
  const Vec2 crop = to_crop(world);
  const double tol = 1e-9 * extent_;
  if (std::abs(crop.x) > extent_ + tol || std::abs(crop.z) > extent_ + tol) {
    throw OutOfBounds("world_to_pixel: point outside the raster extent");
  }
  const double res = resolution();
  const double mid = 0.5 * (px_ - 1);
  return {crop.x / res + mid, crop.z / res + mid};
}

Vec2 BevImage::pixel_to_world(Pixel px) const {
  const double res = resolution();
  const double mid = 0.5 * (px_ - 1);
  return from_crop({(px.u - mid) * res, (px.v - mid) * res});
}

namespace {

struct Binned {
  int row;
  int col;
  double height;  // relative to y_center
};

// Shared binning rule for rasterize_bev and bev_cell_counts.
template <typename Fn>
void for_each_binned(std::span<const Point3> pc, const PoseBev& center, double y_center,
                     double extent, int out_px, const BevConfig& cfg, Fn&& fn) {
  const double c = std::cos(center.theta);
  const double s = std::sin(center.theta);
  const double res = 2.0 * extent / out_px;
  const double mid = 0.5 * (out_px - 1);
  for (const Point3& p : pc) {
    const double h = p.y - y_center;
    if (h < -cfg.vertical_extent || h > cfg.vertical_extent) continue;
    const double dx = p.x - center.x;
    const double dz = p.z - center.z;
    const double cx = c * dx + s * dz;
    const double cz = -s * dx + c * dz;
    if (std::abs(cx) > extent || std::abs(cz) > extent) continue;
    const int col = std::clamp(static_cast<int>(std::floor(cx / res + mid + 0.5)), 0, out_px - 1);
    const int row = std::clamp(static_cast<int>(std::floor(cz / res + mid + 0.5)), 0, out_px - 1);
    fn(Binned{row, col, h});
  }
}

}  // namespace

BevImage rasterize_bev(std::span<const Point3> pc, const PoseBev& center, double y_center,
                       double extent, int out_px, const BevConfig& cfg) {
  if (out_px <= 0 || out_px % 2 == 0) throw InvalidArgument("rasterize_bev: out_px must be odd");
  if (!(extent > 0.0)) throw InvalidArgument("rasterize_bev: extent must be positive");

  BevImage img(cfg.channels(), out_px, extent, center);
  std::vector<int> counts(static_cast<std::size_t>(out_px) * out_px, 0);
  const double band = 2.0 * cfg.vertical_extent / cfg.n_slices;
  const int max_c = cfg.n_slices;
  const int density_c = cfg.n_slices + 1;

  for_each_binned(pc, center, y_center, extent, out_px, cfg, [&](const Binned& b) {
    const double below = b.height + cfg.vertical_extent;  // in [0, 2 * vertical_extent]
    const int slice = std::min(cfg.n_slices - 1, static_cast<int>(below / band));
    const float in_slice = static_cast<float>(std::clamp((below - slice * band) / band, 0.0, 1.0));
    const float overall = static_cast<float>(below / (2.0 * cfg.vertical_extent));
    float& sv = img.at(slice, b.row, b.col);
    sv = std::max(sv, in_slice);
    float& mv = img.at(max_c, b.row, b.col);
    mv = std::max(mv, overall);
    ++counts[static_cast<std::size_t>(b.row) * out_px + b.col];
  });

  const double norm = std::log1p(static_cast<double>(cfg.density_saturation));
  for (int r = 0; r < out_px; ++r) {
    for (int col = 0; col < out_px; ++col) {
      const int n = counts[static_cast<std::size_t>(r) * out_px + col];
      if (n == 0) continue;
      img.at(density_c, r, col) = static_cast<float>(std::min(1.0, std::log1p(n) / norm));
    }
  }
  return img;
}

std::vector<int> bev_cell_counts(std::span<const Point3> pc, const PoseBev& center,
                                 double y_center, double extent, int out_px,
                                 const BevConfig& cfg) {
  std::vector<int> counts(static_cast<std::size_t>(out_px) * out_px, 0);
  for_each_binned(pc, center, y_center, extent, out_px, cfg, [&](const Binned& b) {
    ++counts[static_cast<std::size_t>(b.row) * out_px + b.col];
  });
  return counts;
}

void dump_bev_pgm(const BevImage& image, const std::filesystem::path& dir, const std::string& tag) {
  std::filesystem::create_directories(dir);
  const int n = image.size();
  for (int c = 0; c < image.channels(); ++c) {
    const auto path = dir / (tag + "_c" + std::to_string(c) + ".pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << "P5\n" << n << ' ' << n << "\n255\n";
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) {
        const float v = std::clamp(image.at(c, r, col), 0.0f, 1.0f);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
      }
    }
    if (!out) throw IoError("write failed: " + path.string());
  }
}

}  // namespace bevtrack
