#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "bevtrack/errors.h"
#include "bevtrack/net/checkpoint.h"
#include "bevtrack/net/ops.h"
#include "bevtrack/net/optim.h"
#include "support/gradient_suite.h"

using namespace bevtrack;
using namespace bevtrack::net;

TEST(Gradients, EveryOpMatchesFiniteDifferences) {
  for (const auto& c : bevtrack::testing::run_gradient_suite(11, false)) {
    EXPECT_LT(c.result.max_rel_error, 1e-3) << c.name << " worst at " << c.result.worst;
    EXPECT_GT(c.result.checked, 0) << c.name;
  }
}

TEST(Conv2d, MatchesDirectLoop) {
  std::mt19937_64 rng(1);
  auto x = bevtrack::testing::random_tensor({2, 8, 7}, rng);
  auto w = bevtrack::testing::random_tensor({3, 2, 3, 3}, rng);
  auto b = bevtrack::testing::random_tensor({3}, rng);
  const auto y = conv2d(x, w, b, 2, 1);
  ASSERT_EQ(y->shape(), (std::vector<int>{3, 4, 4}));
  for (int o = 0; o < 3; ++o) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double acc = b->value.data[o];
        for (int ci = 0; ci < 2; ++ci) {
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
              const int yy = 2 * r - 1 + i, xx = 2 * c - 1 + j;
              if (yy < 0 || yy >= 8 || xx < 0 || xx >= 7) continue;
              acc += w->value.data[((o * 2 + ci) * 3 + i) * 3 + j] * x->value.data[(ci * 8 + yy) * 7 + xx];
            }
          }
        }
        EXPECT_NEAR(y->value.data[(o * 4 + r) * 4 + c], acc, 1e-12);
      }
    }
  }
}

TEST(CrossCorrelate, MatchesDirectLoop) {
  std::mt19937_64 rng(2);
  auto t = bevtrack::testing::random_tensor({2, 2, 3}, rng);
  auto s = bevtrack::testing::random_tensor({2, 5, 6}, rng);
  const auto y = cross_correlate(t, s);
  ASSERT_EQ(y->shape(), (std::vector<int>{2, 4, 4}));
  for (int d = 0; d < 2; ++d) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double acc = 0.0;
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 3; ++j) acc += t->value.data[(d * 2 + i) * 3 + j] * s->value.data[(d * 5 + r + i) * 6 + c + j];
        }
        EXPECT_NEAR(y->value.data[(d * 4 + r) * 4 + c], acc, 1e-12);
      }
    }
  }
}

TEST(Losses, SpotValues) {
  EXPECT_NEAR(bce(0.5, 1.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(smooth_l1(0.5), 0.125, 1e-15);
  EXPECT_NEAR(smooth_l1(-2.0), 1.5, 1e-15);
  auto p = parameter<double>(Tensor<double>({2}, std::vector<double>{0.5, 0.5}));
  const std::vector<double> t{1.0, 0.0};
  EXPECT_NEAR(bce_sum(p, std::span<const double>(t))->value.data[0], 2 * std::log(2.0), 1e-12);
}

TEST(Autograd, BackwardNeedsScalarRoot) {
  std::mt19937_64 rng(3);
  auto x = bevtrack::testing::random_tensor({3}, rng);
  EXPECT_THROW(backward(relu(x)), std::exception);
}

TEST(Autograd, GradientsAccumulateOverSharedInputs) {
  auto x = parameter<double>(Tensor<double>({1}, std::vector<double>{3.0}));
  const std::vector<Var<double>> terms{x, x};
  const std::vector<double> zero{0.0};
  auto y = squared_error_sum(add<double>(terms), std::span<const double>(zero));  // (2x)^2
  backward(y);
  EXPECT_NEAR(x->grad[0], 8 * 3.0, 1e-12);
}

TEST(Autograd, ShapeErrors) {
  std::mt19937_64 rng(4);
  auto a = bevtrack::testing::random_tensor({3, 4}, rng);
  auto w = bevtrack::testing::random_tensor({5, 3}, rng);
  auto b = bevtrack::testing::random_tensor({5}, rng);
  EXPECT_THROW(linear(a, w, b), ShapeError);
  auto z = parameter<double>(Tensor<double>({3}, 0.0));
  EXPECT_THROW(cosine_similarity(z, z), InvalidArgument);
}

TEST(Sgd, MomentumUpdate) {
  ParamStore<double> store;
  auto p = store.add_constant_init("p", {2}, 1.0);
  p->grad = {0.5, -1.0};
  sgd_step(store, 0.1, 0.9);
  EXPECT_NEAR(p->value.data[0], 1.0 - 0.1 * 0.5, 1e-15);
  p->grad = {0.5, -1.0};
  sgd_step(store, 0.1, 0.9);
  // v = 0.9 * 0.5 + 0.5 = 0.95
  EXPECT_NEAR(p->value.data[0], 0.95 - 0.1 * 0.95, 1e-15);
  p->grad.clear();
  EXPECT_THROW(sgd_step(store, 0.1, 0.9), InvalidArgument);
}

TEST(PlateauSchedule, DropsAfterPatienceExceeded) {
  PlateauSchedule s;
  s.lr = 1e-4;
  EXPECT_DOUBLE_EQ(lr_plateau_update(s, 1.0), 1e-4);
  EXPECT_DOUBLE_EQ(lr_plateau_update(s, 0.5), 1e-4);   // improvement
  EXPECT_DOUBLE_EQ(lr_plateau_update(s, 0.5), 1e-4);   // stall 1
  EXPECT_DOUBLE_EQ(lr_plateau_update(s, 0.6), 1e-4);   // stall 2
  EXPECT_NEAR(lr_plateau_update(s, 0.6), 1e-5, 1e-20);  // stall 3 > patience
  EXPECT_NEAR(lr_plateau_update(s, 0.7), 1e-5, 1e-20);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  ParamStore<float> a;
  a.add_weight("layer.w", {4, 3}, 3, rng);
  a.add_constant_init("layer.b", {4}, 0.25f);
  const std::map<std::string, std::string> meta{{"seed", "5"}};
  const std::string bytes = encode_checkpoint(a, meta);
  EXPECT_EQ(std::string(bytes.data(), 4), "BSTK");
  const auto ck = decode_checkpoint(bytes);
  EXPECT_EQ(ck.metadata.at("seed"), "5");
  ASSERT_EQ(ck.names.size(), 2u);
  ParamStore<float> b;
  b.add_constant_init("layer.w", {4, 3}, 0.0f);
  b.add_constant_init("layer.b", {4}, 0.0f);
  apply_checkpoint(ck, b);
  EXPECT_EQ(encode_checkpoint(b, meta), bytes);

  const auto path = std::filesystem::temp_directory_path() / "bevtrack_ckpt_test.bstk";
  save_checkpoint(path, a, meta);
  EXPECT_EQ(load_checkpoint(path).values, ck.values);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  ParamStore<float> a;
  a.add_constant_init("w", {3}, 1.0f);
  const std::string bytes = encode_checkpoint(a, {});
  EXPECT_THROW(decode_checkpoint("XXXX" + bytes.substr(4)), bevtrack::ParseError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 2)), bevtrack::ParseError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), bevtrack::ParseError);
  ParamStore<float> wrong;
  wrong.add_constant_init("w", {4}, 1.0f);
  EXPECT_THROW(apply_checkpoint(decode_checkpoint(bytes), wrong), std::exception);
}
