#include "bevtrack/dataset.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <json.hpp>
#include <numbers>
#include <spdlog/spdlog.h>

#include "bevtrack/errors.h"
#include "bevtrack/io.h"

namespace bevtrack {

using nlohmann::json;

const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar: return "car";
    case ObjectClass::kCyclist: return "cyclist";
    case ObjectClass::kPedestrian: return "pedestrian";
  }
  return "?";
}

ObjectClass object_class_from_string(const std::string& s) {
  if (s == "car") return ObjectClass::kCar;
  if (s == "cyclist") return ObjectClass::kCyclist;
  if (s == "pedestrian") return ObjectClass::kPedestrian;
  throw InvalidArgument("unknown object class: " + s);
}

void SceneConfig::validate() const {
  auto range = [](double lo, double hi, const char* what) {
    if (!(lo > 0.0) || !(hi >= lo)) throw InvalidArgument(std::string("SceneConfig: bad range for ") + what);
  };
  if (n_tracklets < 1) throw InvalidArgument("SceneConfig: n_tracklets must be >= 1");
  if (frames < 2) throw InvalidArgument("SceneConfig: frames must be >= 2");
  range(w_min, w_max, "w");
  range(l_min, l_max, "l");
  range(h_min, h_max, "h");
  range(speed_min, speed_max, "speed");
  range(lateral_min, lateral_max, "lateral offset");
  if (speed_noise < 0 || turn_rate_max < 0 || turn_noise < 0 || sensor_noise < 0) {
    throw InvalidArgument("SceneConfig: noise levels must be non-negative");
  }
  if (!(point_density > 0.0) || ground_density < 0.0) throw InvalidArgument("SceneConfig: bad density");
  if (distractors < 0 || clutter_blobs < 0) throw InvalidArgument("SceneConfig: negative object count");
  if (!(sensor_height > 0.0)) throw InvalidArgument("SceneConfig: sensor_height must be positive");
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Point3 quantize(const Point3& p) { return {as_f32(p.x), as_f32(p.y), as_f32(p.z)}; }

// Bounding-circle radius of a box footprint.
double footprint_radius(const BoxSpec& s) { return 0.5 * std::hypot(s.w, s.l); }

struct Face {
  Point3 center;  // canonical frame
  Point3 u, v;    // half-extent axes spanning the face
  Point3 normal;
};

std::array<Face, 6> box_faces(const BoxSpec& s) {
  const double hx = s.l / 2, hy = s.h / 2, hz = s.w / 2;
  return {{
      {{hx, 0, 0}, {0, hy, 0}, {0, 0, hz}, {1, 0, 0}},
      {{-hx, 0, 0}, {0, hy, 0}, {0, 0, hz}, {-1, 0, 0}},
      {{0, hy, 0}, {hx, 0, 0}, {0, 0, hz}, {0, 1, 0}},
      {{0, -hy, 0}, {hx, 0, 0}, {0, 0, hz}, {0, -1, 0}},
      {{0, 0, hz}, {hx, 0, 0}, {0, hy, 0}, {0, 0, 1}},
      {{0, 0, -hz}, {hx, 0, 0}, {0, hy, 0}, {0, 0, -1}},
  }};
}

Point3 sub(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

struct Trajectory {
  BoxSpec spec;
  double y_center = 0.0;
  std::vector<PoseBev> poses;

  Box3d box(int t) const { return {poses[t], spec, y_center}; }
};

BoxSpec random_car(const SceneConfig& cfg, Rng& rng) {
  return {uniform(rng, cfg.w_min, cfg.w_max), uniform(rng, cfg.l_min, cfg.l_max), uniform(rng, cfg.h_min, cfg.h_max)};
}

std::vector<PoseBev> drive(const SceneConfig& cfg, PoseBev start, double speed, double turn_rate, int frames,
                           Rng& rng) {
  std::normal_distribution<double> dv(0.0, cfg.speed_noise);
  std::normal_distribution<double> dth(0.0, cfg.turn_noise);
  std::vector<PoseBev> poses{start};
  for (int t = 1; t < frames; ++t) {
    PoseBev p = poses.back();
    speed = std::clamp(speed + (cfg.speed_noise > 0 ? dv(rng) : 0.0), 0.0, 1.5 * cfg.speed_max);
    p.theta = normalize_angle(p.theta + turn_rate + (cfg.turn_noise > 0 ? dth(rng) : 0.0));
    p.x += speed * std::cos(p.theta);
    p.z += speed * std::sin(p.theta);
    poses.push_back(p);
  }
  return poses;
}

double min_range(const std::vector<PoseBev>& poses) {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& p : poses) r = std::min(r, std::hypot(p.x, p.z));
  return r;
}

Trajectory target_trajectory(const SceneConfig& cfg, Rng& rng) {
  Trajectory tr;
  tr.spec = random_car(cfg, rng);
  tr.y_center = -cfg.sensor_height + tr.spec.h / 2;
  for (int attempt = 0;; ++attempt) {
    const double speed = uniform(rng, cfg.speed_min, cfg.speed_max);
    const double turn = uniform(rng, -cfg.turn_rate_max, cfg.turn_rate_max);
    const PoseBev start{0.0, 0.0, uniform(rng, -std::numbers::pi, std::numbers::pi)};
    auto poses = drive(cfg, start, speed, turn, cfg.frames, rng);
    // Shift the path so its midpoint passes the sensor at a lateral offset.
    const PoseBev& a = poses.front();
    const PoseBev& b = poses.back();
    const double mx = 0.5 * (a.x + b.x), mz = 0.5 * (a.z + b.z);
    double dx = b.x - a.x, dz = b.z - a.z;
    const double len = std::hypot(dx, dz);
    if (len > 1e-6) {
      dx /= len;
      dz /= len;
    } else {
      dx = std::cos(start.theta);
      dz = std::sin(start.theta);
    }
    const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    const double lateral = side * uniform(rng, cfg.lateral_min, cfg.lateral_max);
    const double ox = -dz * lateral - mx, oz = dx * lateral - mz;
    for (auto& p : poses) {
      p.x += ox;
      p.z += oz;
    }
    if (min_range(poses) >= 0.75 * cfg.lateral_min || attempt > 50) {
      tr.poses = std::move(poses);
      return tr;
    }
  }
}

bool clear_of(const Trajectory& target, const std::vector<PoseBev>& poses, double radius, double margin) {
  const double r_t = footprint_radius(target.spec);
  for (std::size_t t = 0; t < target.poses.size(); ++t) {
    const auto& p = poses[std::min(t, poses.size() - 1)];
    if (center_distance(p, target.poses[t]) < r_t + radius + margin) return false;
  }
  return true;
}

std::vector<Trajectory> distractor_trajectories(const SceneConfig& cfg, const Trajectory& target, Rng& rng) {
  std::vector<Trajectory> out;
  for (int d = 0; d < cfg.distractors; ++d) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      Trajectory tr;
      tr.spec = random_car(cfg, rng);
      tr.y_center = -cfg.sensor_height + tr.spec.h / 2;
      const int anchor = std::uniform_int_distribution<int>(0, cfg.frames - 1)(rng);
      const double ang = uniform(rng, -std::numbers::pi, std::numbers::pi);
      const double dist = uniform(rng, 3.0, 8.0);
      PoseBev at{target.poses[anchor].x + dist * std::cos(ang), target.poses[anchor].z + dist * std::sin(ang),
                 uniform(rng, -std::numbers::pi, std::numbers::pi)};
      const bool parked = uniform(rng, 0.0, 1.0) < 0.5;
      std::vector<PoseBev> poses;
      if (parked) {
        poses.assign(cfg.frames, at);
      } else {
        // Drive forward from the anchor frame and backward to frame 0.
        const double speed = uniform(rng, cfg.speed_min, cfg.speed_max);
        poses.resize(cfg.frames);
        for (int t = 0; t < cfg.frames; ++t) {
          const double s = speed * (t - anchor);
          poses[t] = {at.x + s * std::cos(at.theta), at.z + s * std::sin(at.theta), at.theta};
        }
      }
      if (clear_of(target, poses, footprint_radius(tr.spec), 0.5) && min_range(poses) > 2.0) {
        tr.poses = std::move(poses);
        out.push_back(std::move(tr));
        break;
      }
    }
  }
  return out;
}

struct Blob {
  Point3 center;
  double radius;
  int points;
};

std::vector<Blob> clutter(const SceneConfig& cfg, const Trajectory& target, Rng& rng) {
  std::vector<Blob> out;
  for (int i = 0; i < cfg.clutter_blobs; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int anchor = std::uniform_int_distribution<int>(0, cfg.frames - 1)(rng);
      const double ang = uniform(rng, -std::numbers::pi, std::numbers::pi);
      const double dist = uniform(rng, 2.0, 8.0);
      const double radius = uniform(rng, 0.15, 0.5);
      const PoseBev at{target.poses[anchor].x + dist * std::cos(ang), target.poses[anchor].z + dist * std::sin(ang),
                       0.0};
      if (!clear_of(target, {at}, radius, 0.3) || std::hypot(at.x, at.z) < 2.0) continue;
      const double y = -cfg.sensor_height + uniform(rng, radius, 1.5);
      out.push_back({{at.x, y, at.z}, radius, std::uniform_int_distribution<int>(15, 60)(rng)});
      break;
    }
  }
  return out;
}

void add_ground(const SceneConfig& cfg, const PoseBev& around, PointCloud& pc, Rng& rng) {
  constexpr double radius = 10.0;
  const int n = static_cast<int>(cfg.ground_density * std::numbers::pi * radius * radius);
  std::normal_distribution<double> noise(0.0, std::max(cfg.sensor_noise, 1e-12));
  for (int i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
    const double a = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const double x = around.x + r * std::cos(a), z = around.z + r * std::sin(a);
    const double range = std::hypot(x, z);
    // Thin out with range like a real scan.
    const double keep = std::min(1.0, (radius / std::max(range, 1e-6)) * (radius / std::max(range, 1e-6)));
    if (uniform(rng, 0.0, 1.0) > keep) continue;
    pc.push_back({x, -cfg.sensor_height + noise(rng), z});
  }
}

}  // namespace

PointCloud sample_visible_surface(const Box3d& box, double density, double noise, Rng& rng) {
  PointCloud out;
  std::normal_distribution<double> n01(0.0, 1.0);
  for (const Face& f : box_faces(box.spec)) {
    const Point3 c = from_box_frame(box, f.center);
    const Point3 tip = from_box_frame(box, {f.center.x + f.normal.x, f.center.y + f.normal.y, f.center.z + f.normal.z});
    const Point3 n = sub(tip, c);
    const double range = norm(c);
    if (!(range > 1e-6)) continue;
    const double cos_inc = -dot(n, c) / range;
    // Only faces turned towards the sensor are hit.
    if (cos_inc <= 0.0) continue;
    const double area = 4.0 * norm(f.u) * norm(f.v);
    const double expected = density * area * cos_inc / (range * range);
    int count = static_cast<int>(expected);
    if (uniform(rng, 0.0, 1.0) < expected - count) ++count;
    for (int i = 0; i < count; ++i) {
      const double a = uniform(rng, -1.0, 1.0), b = uniform(rng, -1.0, 1.0);
      const Point3 local{f.center.x + a * f.u.x + b * f.v.x, f.center.y + a * f.u.y + b * f.v.y,
                         f.center.z + a * f.u.z + b * f.v.z};
      Point3 p = from_box_frame(box, local);
      if (noise > 0.0) {
        p.x += noise * n01(rng);
        p.y += noise * n01(rng);
        p.z += noise * n01(rng);
      }
      out.push_back(p);
    }
  }
  return out;
}

SequenceDataset generate_synthetic(const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SequenceDataset data;
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int k = 0; k < cfg.n_tracklets; ++k) {
    const Trajectory target = target_trajectory(cfg, rng);
    const auto others = distractor_trajectories(cfg, target, rng);
    const auto blobs = clutter(cfg, target, rng);

    Tracklet tl;
    char id[32];
    std::snprintf(id, sizeof id, "t%04d", k);
    tl.id = id;
    tl.object_class = ObjectClass::kCar;
    for (int t = 0; t < cfg.frames; ++t) {
      const Box3d gt = target.box(t);
      PointCloud pc = sample_visible_surface(gt, cfg.point_density, cfg.sensor_noise, rng);
      if (std::hypot(gt.pose.x, gt.pose.z) <= 30.0 && crop_points_in_box(pc, gt).empty()) {
        // Guarantee at least one return from a nearby target: the center of
        // its top face, which the sensor always sees.
        pc.push_back(from_box_frame(gt, {0.0, gt.spec.h / 2, 0.0}));
      }
      for (const auto& o : others) {
        const auto more = sample_visible_surface(o.box(t), cfg.point_density, cfg.sensor_noise, rng);
        pc.insert(pc.end(), more.begin(), more.end());
      }
      for (const auto& b : blobs) {
        for (int i = 0; i < b.points; ++i) {
          pc.push_back({b.center.x + b.radius * n01(rng) / 2, b.center.y + b.radius * n01(rng) / 2,
                        b.center.z + b.radius * n01(rng) / 2});
        }
      }
      add_ground(cfg, gt.pose, pc, rng);
      for (auto& p : pc) p = quantize(p);
      tl.frames.push_back(std::move(pc));
      tl.gt.push_back(gt);
    }
    data.tracklets.push_back(std::move(tl));
  }
  return data;
}

PointCloud parse_frame(std::string_view bytes, const FrameRemap& remap) {
  if (bytes.size() % 16 != 0) {
    throw ParseError("frame size " + std::to_string(bytes.size()) + " is not a multiple of 16",
                     bytes.size() - bytes.size() % 16);
  }
  static_assert(std::endian::native == std::endian::little, "frame parsing assumes a little-endian host");
  PointCloud pc;
  pc.reserve(bytes.size() / 16);
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    float v[4];
    std::memcpy(v, bytes.data() + off, sizeof v);
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
      throw ParseError("non-finite coordinate", off);
    }
    const double s[3] = {v[0], v[1], v[2]};
    pc.push_back({remap[0] * s[0] + remap[1] * s[1] + remap[2] * s[2],
                  remap[3] * s[0] + remap[4] * s[1] + remap[5] * s[2],
                  remap[6] * s[0] + remap[7] * s[1] + remap[8] * s[2]});
  }
  return pc;
}

std::string encode_frame(std::span<const Point3> pc, const FrameRemap& remap) {
  // The remap is a rotation, so its transpose maps internal points back.
  std::string out(pc.size() * 16, '\0');
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const double p[3] = {pc[i].x, pc[i].y, pc[i].z};
    const float v[4] = {static_cast<float>(remap[0] * p[0] + remap[3] * p[1] + remap[6] * p[2]),
                        static_cast<float>(remap[1] * p[0] + remap[4] * p[1] + remap[7] * p[2]),
                        static_cast<float>(remap[2] * p[0] + remap[5] * p[1] + remap[8] * p[2]), 0.0f};
    std::memcpy(out.data() + 16 * i, v, sizeof v);
  }
  return out;
}

namespace {

std::filesystem::path frame_path(const std::string& tid, std::size_t frame) {
  char name[32];
  std::snprintf(name, sizeof name, "%06zu.bin", frame);
  return std::filesystem::path("frames") / tid / name;
}

std::filesystem::path label_path(const std::string& tid) { return std::filesystem::path("labels") / (tid + ".json"); }

json labels_json(const Tracklet& tl) {
  json frames = json::array();
  for (std::size_t t = 0; t < tl.gt.size(); ++t) {
    const Box3d& b = tl.gt[t];
    frames.push_back({{"frame", t},
                      {"x", b.pose.x},
                      {"y", b.y_center},
                      {"z", b.pose.z},
                      {"theta", b.pose.theta},
                      {"w", b.spec.w},
                      {"h", b.spec.h},
                      {"l", b.spec.l}});
  }
  return {{"frames", frames}};
}

// Hash over the per-file hashes in manifest order.
struct HashBuilder {
  std::string listing;
  void add(const std::filesystem::path& rel, std::string_view bytes) {
    listing += rel.generic_string() + " " + sha256_hex(bytes) + "\n";
  }
  std::string finish() const { return sha256_hex(listing); }
};

}  // namespace

std::string save_dataset(const std::filesystem::path& dir, const SequenceDataset& data, const std::string& scene_json) {
  HashBuilder hb;
  json tracklets = json::array();
  for (const auto& tl : data.tracklets) {
    if (tl.frames.size() != tl.gt.size()) throw InvalidArgument("save_dataset: frame and label counts differ");
    const std::string labels = labels_json(tl).dump(1) + "\n";
    write_file_atomic(dir / label_path(tl.id), labels);
    hb.add(label_path(tl.id), labels);
    for (std::size_t t = 0; t < tl.frames.size(); ++t) {
      const std::string bytes = encode_frame(tl.frames[t], data.sensor_remap);
      write_file_atomic(dir / frame_path(tl.id, t), bytes);
      hb.add(frame_path(tl.id, t), bytes);
    }
    tracklets.push_back({{"id", tl.id}, {"class", to_string(tl.object_class)}, {"frames", tl.frames.size()}});
  }
  const std::string hash = hb.finish();
  json manifest = {{"version", 1},
                   {"frame_rate", data.frame_rate},
                   {"sensor_remap", data.sensor_remap},
                   {"content_hash", hash},
                   {"scene", json::parse(scene_json)},
                   {"tracklets", tracklets}};
  write_file_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
  return hash;
}

namespace {

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

template <typename V>
V field(const json& j, const char* key, const std::filesystem::path& where) {
  if (!j.contains(key)) throw ParseError(where.string() + ": missing key '" + key + "'", 0);
  try {
    return j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ParseError(where.string() + ": bad value for '" + key + "': " + e.what(), 0);
  }
}

}  // namespace

SequenceDataset load_sequence(const std::filesystem::path& dir, bool force) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw IoError("missing " + manifest_path.string());
  const json manifest = parse_json_file(manifest_path);

  SequenceDataset data;
  data.frame_rate = field<double>(manifest, "frame_rate", manifest_path);
  const auto remap = field<std::vector<double>>(manifest, "sensor_remap", manifest_path);
  if (remap.size() != 9) throw ParseError(manifest_path.string() + ": sensor_remap needs 9 entries", 0);
  std::copy(remap.begin(), remap.end(), data.sensor_remap.begin());
  const auto expected_hash = field<std::string>(manifest, "content_hash", manifest_path);

  HashBuilder hb;
  for (const auto& entry : field<json>(manifest, "tracklets", manifest_path)) {
    Tracklet tl;
    tl.id = field<std::string>(entry, "id", manifest_path);
    tl.object_class = object_class_from_string(field<std::string>(entry, "class", manifest_path));
    const auto n = field<std::size_t>(entry, "frames", manifest_path);

    const auto lp = dir / label_path(tl.id);
    if (!std::filesystem::exists(lp)) throw IoError("missing label file " + lp.string());
    const std::string label_text = read_file(lp);
    hb.add(label_path(tl.id), label_text);
    json labels;
    try {
      labels = json::parse(label_text);
    } catch (const json::parse_error& e) {
      throw ParseError(lp.string() + ": " + e.what(), e.byte);
    }
    const auto frames = field<json>(labels, "frames", lp);
    if (frames.size() != n) throw ParseError(lp.string() + ": label count differs from manifest", 0);
    for (std::size_t t = 0; t < n; ++t) {
      const auto& f = frames[t];
      if (field<std::size_t>(f, "frame", lp) != t) throw ParseError(lp.string() + ": frames out of order", 0);
      Box3d b;
      b.pose = {field<double>(f, "x", lp), field<double>(f, "z", lp), field<double>(f, "theta", lp)};
      b.y_center = field<double>(f, "y", lp);
      b.spec = {field<double>(f, "w", lp), field<double>(f, "l", lp), field<double>(f, "h", lp)};
      if (!tl.gt.empty() && !(b.spec == tl.gt.front().spec)) {
        spdlog::warn("{}: box size changes at frame {}; using the frame-0 size", tl.id, t);
        b.spec = tl.gt.front().spec;
      }
      tl.gt.push_back(b);

      const auto fp = dir / frame_path(tl.id, t);
      if (!std::filesystem::exists(fp)) throw IoError("missing frame " + fp.string());
      const std::string bytes = read_file(fp);
      hb.add(frame_path(tl.id, t), bytes);
      try {
        tl.frames.push_back(parse_frame(bytes, data.sensor_remap));
      } catch (const ParseError& e) {
        throw ParseError(fp.string() + ": " + e.what(), e.offset());
      }
    }
    data.tracklets.push_back(std::move(tl));
  }
  data.content_hash = hb.finish();
  if (data.content_hash != expected_hash) {
    if (!force) {
      throw IoError("dataset content hash " + data.content_hash + " does not match manifest " + expected_hash +
                    " (use --force to override)");
    }
    spdlog::warn("dataset content hash mismatch ignored (--force)");
  }
  return data;
}

std::string dataset_content_hash(const std::filesystem::path& dir, const SequenceDataset& layout) {
  HashBuilder hb;
  for (const auto& tl : layout.tracklets) {
    hb.add(label_path(tl.id), read_file(dir / label_path(tl.id)));
    for (std::size_t t = 0; t < tl.frames.size(); ++t) hb.add(frame_path(tl.id, t), read_file(dir / frame_path(tl.id, t)));
  }
  return hb.finish();
}

}  // namespace bevtrack
