#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bevtrack/cli.h"
#include "bevtrack/dataset.h"
#include "bevtrack/errors.h"

using namespace bevtrack;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bevtrack_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bevtrack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data());
}

SceneConfig small_scene(std::uint64_t seed) {
  SceneConfig sc;
  sc.n_tracklets = 3;
  sc.frames = 5;
  sc.seed = seed;
  return sc;
}

std::string f32_record(float x, float y, float z, float r) {
  std::string s(16, '\0');
  const float v[4]{x, y, z, r};
  std::memcpy(s.data(), v, 16);
  return s;
}

}  // namespace

TEST(Synthetic, VisibleFacesOnly) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Box3d box;
    box.pose = {8.0 * u(rng), 8.0 + 6.0 * u(rng), M_PI * u(rng)};
    box.spec = {1.8, 4.2, 1.5};
    box.y_center = -1.73 + 0.75;
    const auto pc = sample_visible_surface(box, 2000.0, 0.0, rng);
    ASSERT_FALSE(pc.empty());
    const Point3 sensor = to_box_frame(box, Point3{0, 0, 0});
    const double half[3]{0.5 * box.spec.l, 0.5 * box.spec.h, 0.5 * box.spec.w};
    for (const auto& p : pc) {
      const Point3 q = to_box_frame(box, p);
      const double c[3]{q.x, q.y, q.z}, s[3]{sensor.x, sensor.y, sensor.z};
      // The face is the axis where the point touches the box boundary.
      int axis = -1;
      for (int a = 0; a < 3; ++a) {
        if (std::abs(std::abs(c[a]) - half[a]) < 1e-9) axis = a;
        EXPECT_LE(std::abs(c[a]), half[a] + 1e-9);
      }
      ASSERT_GE(axis, 0);
      // The sensor lies on the outer side of that face's plane.
      const double sign = c[axis] > 0 ? 1.0 : -1.0;
      EXPECT_GT(sign * s[axis], half[axis]);
    }
  }
}

TEST(Synthetic, EveryNearbyTargetHasPoints) {
  SceneConfig sc;
  sc.n_tracklets = 10;
  sc.frames = 30;
  sc.seed = 2;
  const auto data = generate_synthetic(sc);
  ASSERT_EQ(data.tracklets.size(), 10u);
  for (const auto& tl : data.tracklets) {
    ASSERT_EQ(tl.frames.size(), 30u);
    for (std::size_t f = 0; f < tl.frames.size(); ++f) {
      if (std::hypot(tl.gt[f].pose.x, tl.gt[f].pose.z) > 30.0) continue;
      EXPECT_FALSE(crop_points_in_box(tl.frames[f], tl.gt[f]).empty()) << tl.id << " frame " << f;
    }
  }
}

TEST(Synthetic, ConfigValidation) {
  SceneConfig sc;
  sc.frames = 1;
  EXPECT_THROW(generate_synthetic(sc), InvalidArgument);
  sc = SceneConfig{};
  sc.w_min = 3.0;
  EXPECT_THROW(generate_synthetic(sc), InvalidArgument);
}

TEST(FrameFormat, SingleRecordAndRemap) {
  const auto pc = parse_frame(f32_record(1.0f, 2.0f, 3.0f, 0.5f), kDefaultSensorRemap);
  ASSERT_EQ(pc.size(), 1u);
  // (x, y, z) in the sensor frame maps to (x, z, -y).
  EXPECT_EQ(pc[0].x, 1.0);
  EXPECT_EQ(pc[0].y, 3.0);
  EXPECT_EQ(pc[0].z, -2.0);
  EXPECT_TRUE(parse_frame("", kDefaultSensorRemap).empty());
  EXPECT_EQ(parse_frame(encode_frame(pc, kDefaultSensorRemap), kDefaultSensorRemap), pc);
}

TEST(FrameFormat, TruncatedRecordReportsOffset) {
  const std::string bytes = f32_record(1, 2, 3, 4) + f32_record(5, 6, 7, 8) + std::string(7, '\0');
  try {
    parse_frame(bytes, kDefaultSensorRemap);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("32"), std::string::npos) << e.what();
  }
}

TEST(Dataset, WriteLoadRoundTrip) {
  const auto dir = scratch("roundtrip");
  const auto data = generate_synthetic(small_scene(3));
  const std::string hash = save_dataset(dir, data);
  const auto back = load_sequence(dir);
  EXPECT_EQ(back.content_hash, hash);
  ASSERT_EQ(back.tracklets.size(), data.tracklets.size());
  for (std::size_t i = 0; i < data.tracklets.size(); ++i) {
    EXPECT_EQ(back.tracklets[i].id, data.tracklets[i].id);
    EXPECT_EQ(back.tracklets[i].frames, data.tracklets[i].frames);
    EXPECT_EQ(back.tracklets[i].gt, data.tracklets[i].gt);
  }
  fs::remove_all(dir);
}

TEST(Dataset, HashMismatchNeedsForce) {
  const auto dir = scratch("hash");
  const auto data = generate_synthetic(small_scene(4));
  save_dataset(dir, data);
  const auto frame = dir / "frames" / data.tracklets[0].id / "000001.bin";
  {
    std::ofstream out(frame, std::ios::binary | std::ios::app);
    out << f32_record(0, 0, 0, 0);
  }
  EXPECT_THROW(load_sequence(dir), IoError);
  EXPECT_NO_THROW(load_sequence(dir, true));
  fs::remove(frame);
  EXPECT_THROW(load_sequence(dir, true), IoError);
  fs::remove_all(dir);
}

TEST(Dataset, MissingManifest) {
  EXPECT_THROW(load_sequence(scratch("nothing")), IoError);
}

TEST(Cli, SynthIsByteIdenticalForAFixedSeed) {
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  ASSERT_EQ(cli({"synth", "--out", a.string(), "--tracklets", "2", "--frames", "4", "--seed", "9"}), 0);
  ASSERT_EQ(cli({"synth", "--out", b.string(), "--tracklets", "2", "--frames", "4", "--seed", "9"}), 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
  }
  EXPECT_GT(files, 8u);
  EXPECT_TRUE(fs::exists(a / "synth_config.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, ExitCodesAndConfigLog) {
  const auto data = scratch("cli_data"), out = scratch("cli_out");
  ASSERT_EQ(cli({"synth", "--out", data.string(), "--tracklets", "2", "--frames", "3", "--seed", "1"}), 0);
  // Usage errors.
  EXPECT_EQ(cli({"frobnicate"}), 1);
  EXPECT_EQ(cli({"track", "--data", data.string()}), 1);
  EXPECT_EQ(cli({"track", "--data", data.string(), "--out", "x.csv", "--search", "grid"}), 1);
  // Runtime errors: missing dataset, and a run needing networks without a checkpoint.
  EXPECT_EQ(cli({"track", "--data", (data / "missing").string(), "--out", (out / "r.csv").string()}), 2);
  EXPECT_EQ(cli({"track", "--data", data.string(), "--out", (out / "r.csv").string()}), 2);
  // Networks are not needed for the filter baseline with the oracle selector.
  ASSERT_EQ(cli({"track", "--data", data.string(), "--out", (out / "r.csv").string(), "--search", "kf", "--selector",
                 "oracle"}),
            0);
  EXPECT_TRUE(fs::exists(out / "r.csv"));
  EXPECT_TRUE(fs::exists(out / "track_config.json"));
  const auto cfg = slurp(out / "track_config.json");
  EXPECT_NE(cfg.find("\"search\": \"kf\""), std::string::npos);
  ASSERT_EQ(cli({"eval", "--data", data.string(), "--out", (out / "eval").string(), "--search", "exhaustive",
                 "--selector", "oracle"}),
            0);
  EXPECT_NE(slurp(out / "eval" / "report.txt").find("100.0 / 100.0"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "eval" / "eval_config.json"));
  fs::remove_all(data);
  fs::remove_all(out);
}
