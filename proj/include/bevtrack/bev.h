#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bevtrack/geom.h"

namespace bevtrack {

struct BevConfig {
  int n_slices = 1;
  double vertical_extent = 1.0;  // +/- meters around the object center height
  double model_extent = 2.5;
  double search_extent = 5.0;
  int model_px = 127;
  int search_px = 255;
  int density_saturation = 63;

  int channels() const { return n_slices + 2; }
  void validate() const;
};

// Continuous pixel coordinates: u is the column (crop x), v the row (crop z).
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Channel-major (C x H x W) raster of a square crop around `origin`, rotated
// so the crop's +x axis is the origin heading. Channels: n_slices height
// slices, the overall max height, then density.
class BevImage {
 public:
  BevImage(int channels, int px, double extent, PoseBev origin);

  int channels() const { return channels_; }
  int size() const { return px_; }
  double extent() const { return extent_; }
  double resolution() const { return 2.0 * extent_ / px_; }
  const PoseBev& origin() const { return origin_; }

  float& at(int c, int row, int col) { return data_[(c * px_ + row) * px_ + col]; }
  float at(int c, int row, int col) const { return data_[(c * px_ + row) * px_ + col]; }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  // Crop-frame planar coordinates of a world point.
  Vec2 to_crop(Vec2 world) const;
  Vec2 from_crop(Vec2 crop) const;

  // Throws OutOfBounds when the point lies outside the square extent.
  Pixel world_to_pixel(Vec2 world) const;
  Vec2 pixel_to_world(Pixel px) const;

 private:
  int channels_;
  int px_;
  double extent_;
  PoseBev origin_;
  std::vector<float> data_;
};

// Rasterizes `pc` around `center`; heights are measured relative to y_center.
// Points outside the square extent or the vertical band are dropped.
BevImage rasterize_bev(std::span<const Point3> pc, const PoseBev& center, double y_center,
                       double extent, int out_px, const BevConfig& cfg);

// Raw per-cell point counts of the same binning rasterize_bev uses (row-major
// out_px x out_px).
std::vector<int> bev_cell_counts(std::span<const Point3> pc, const PoseBev& center,
                                 double y_center, double extent, int out_px,
                                 const BevConfig& cfg);

// Writes one 8-bit PGM per channel: <dir>/<tag>_c<k>.pgm.
void dump_bev_pgm(const BevImage& image, const std::filesystem::path& dir, const std::string& tag);

}  // namespace bevtrack
