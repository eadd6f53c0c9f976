#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "bevtrack/geom.h"

namespace bevtrack {

enum class ObjectClass { kCar, kCyclist, kPedestrian };

const char* to_string(ObjectClass c);
ObjectClass object_class_from_string(const std::string& s);

// One object's contiguous frames with a ground-truth box per frame, all in the
// internal frame (ground plane x-z, +y up).
struct Tracklet {
  std::string id;
  ObjectClass object_class = ObjectClass::kCar;
  std::vector<PointCloud> frames;
  std::vector<Box3d> gt;
};

// Row-major 3x3 map from sensor coordinates to internal coordinates.
using FrameRemap = std::array<double, 9>;

// KITTI-style sensor (x forward, y left, z up) to internal y-up: a proper
// rotation (x, y, z) -> (x, z, -y).
inline constexpr FrameRemap kDefaultSensorRemap{1, 0, 0, 0, 0, 1, 0, -1, 0};

struct SequenceDataset {
  std::vector<Tracklet> tracklets;
  FrameRemap sensor_remap = kDefaultSensorRemap;
  double frame_rate = 10.0;
  std::string content_hash;
};

// Desk-scale stand-in for a LIDAR tracking benchmark. Sensor at the origin,
// ground plane at y = -sensor_height.
struct SceneConfig {
  int n_tracklets = 100;
  int frames = 40;
  // Car-like box dimensions (m).
  double w_min = 1.5, w_max = 2.0;
  double l_min = 3.6, l_max = 4.8;
  double h_min = 1.4, h_max = 1.7;
  double speed_min = 0.2, speed_max = 0.8;   // m per frame
  double speed_noise = 0.05;                 // m per frame, per-frame std
  double turn_rate_max = 0.035;              // rad per frame, per-tracklet mean
  double turn_noise = 0.02;                  // rad per frame, per-frame std
  double sensor_noise = 0.02;                // m
  double point_density = 2000.0;             // points per m^2 at 1 m range
  double lateral_min = 4.0, lateral_max = 12.0;  // closest approach to the sensor (m)
  int distractors = 2;
  int clutter_blobs = 6;
  double ground_density = 3.0;               // points per m^2 near the target
  double sensor_height = 1.73;
  std::uint64_t seed = 1;

  void validate() const;  // throws InvalidArgument
};

SequenceDataset generate_synthetic(const SceneConfig& cfg);

// Points sampled on the faces of `box` that face the sensor at the origin.
PointCloud sample_visible_surface(const Box3d& box, double density, double noise, Rng& rng);

// Frame files: little-endian f32 (x, y, z, intensity) records in the sensor
// frame. Parsing applies `remap`; a size that is not a multiple of 16 throws
// ParseError at the first incomplete record.
PointCloud parse_frame(std::string_view bytes, const FrameRemap& remap);
std::string encode_frame(std::span<const Point3> pc, const FrameRemap& remap);

// Layout: manifest.json, frames/<tid>/<frame>.bin, labels/<tid>.json. Labels
// hold internal-frame boxes. Returns the content hash written to the manifest.
std::string save_dataset(const std::filesystem::path& dir, const SequenceDataset& data,
                         const std::string& scene_json = "{}");

// Throws IoError for missing files, ParseError for malformed ones, and
// IoError when the content hash disagrees with the manifest unless `force`.
SequenceDataset load_sequence(const std::filesystem::path& dir, bool force = false);

std::string dataset_content_hash(const std::filesystem::path& dir, const SequenceDataset& layout);

}  // namespace bevtrack
