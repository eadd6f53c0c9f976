#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bevtrack/errors.h"
#include "bevtrack/networks.h"
#include "bevtrack/sim3d.h"

using namespace bevtrack;

namespace {

ShapeSample random_shape(std::mt19937_64& rng, int distinct) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud pc;
  for (int i = 0; i < distinct; ++i) pc.push_back({u(rng), u(rng), u(rng)});
  return resample_fixed(pc, rng);
}

}  // namespace

TEST(ShapeNet, PermutationInvariant) {
  Networks<float> nets(NetworkConfig{});
  std::mt19937_64 rng(1);
  auto s = random_shape(rng, 300);
  const auto a = latent_values(nets.shape.encode(s));
  std::shuffle(s.points.begin(), s.points.end(), rng);
  const auto b = latent_values(nets.shape.encode(s));
  ASSERT_EQ(a.size(), 128u);
  EXPECT_EQ(a, b);
}

TEST(ShapeNet, DuplicatesDoNotChangeTheEncoding) {
  Networks<double> nets(NetworkConfig{});
  std::mt19937_64 rng(2);
  const auto s = random_shape(rng, 50);
  // Encode all 2048 rows directly and compare with the deduplicated path.
  net::Tensor<double> t({static_cast<int>(s.points.size()), 3});
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    t.data[3 * i] = s.points[i].x;
    t.data[3 * i + 1] = s.points[i].y;
    t.data[3 * i + 2] = s.points[i].z;
  }
  const auto full = nets.shape.encode_points(net::constant<double>(std::move(t)));
  const auto dedup = nets.shape.encode(s);
  for (int i = 0; i < 128; ++i) EXPECT_NEAR(full->value.data[i], dedup->value.data[i], 1e-12);
}

TEST(ShapeNet, DecoderShape) {
  Networks<float> nets(NetworkConfig{});
  std::mt19937_64 rng(3);
  const auto z = nets.shape.encode(random_shape(rng, 100));
  EXPECT_EQ(nets.shape.decode(z)->shape(), (std::vector<int>{1024, 3}));
  EXPECT_THROW(nets.shape.encode(ShapeSample{}), EmptyShape);
}

TEST(Similarity, MatchesCosineOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> a(16), b(16);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < 16; ++i) {
      dot += double(a[i]) * b[i];
      na += double(a[i]) * a[i];
      nb += double(b[i]) * b[i];
    }
    EXPECT_NEAR(similarity(a, b), dot / std::sqrt(na * nb), 1e-12);
  }
  const std::vector<float> v{1, 2, 3};
  EXPECT_NEAR(similarity(v, v), 1.0, 1e-12);
  EXPECT_THROW(similarity(std::vector<float>{0, 0, 0}, v), InvalidArgument);
}

TEST(RankCandidates, EmptyCandidatesScoreMinusOne) {
  Networks<float> nets(NetworkConfig{});
  std::mt19937_64 rng(5);
  const auto model_shape = random_shape(rng, 200);
  const auto model = latent_values(nets.shape.encode(model_shape));
  std::vector<ShapeSample> cands{ShapeSample{}, random_shape(rng, 80), model_shape, ShapeSample{}};
  const auto r = rank_candidates(nets.shape, model, cands);
  EXPECT_DOUBLE_EQ(r.scores[0], -1.0);
  EXPECT_DOUBLE_EQ(r.scores[3], -1.0);
  EXPECT_NEAR(r.scores[2], 1.0, 1e-6);
  EXPECT_EQ(r.best_index, 2);
  EXPECT_THROW(rank_candidates(nets.shape, model, std::vector<ShapeSample>{}), InvalidArgument);
  // All empty: lowest index wins.
  const std::vector<ShapeSample> none(3);
  EXPECT_EQ(rank_candidates(nets.shape, model, none).best_index, 0);
}
