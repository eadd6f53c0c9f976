#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bevtrack/dataset.h"
#include "bevtrack/net/ops.h"
#include "bevtrack/train.h"
#include "gradcheck.h"

namespace bevtrack::testing {

struct GradCase {
  std::string name;
  GradCheckResult result;
};

// Finite-difference checks of every differentiable op plus the weighted
// training objective on a real sample, all at double precision.
inline std::vector<GradCase> run_gradient_suite(std::uint64_t seed, bool include_composite = true) {
  using net::Var;
  std::mt19937_64 rng(seed);
  std::vector<GradCase> out;
  auto run = [&](const std::string& name, const std::function<Var<double>()>& f, std::vector<Var<double>> in) {
    out.push_back({name, check_gradients(f, in, rng)});
  };
  // Reduces any tensor to a scalar through a fixed random projection so every
  // output entry receives a distinct upstream gradient.
  auto project = [&rng](const Var<double>& v) {
    std::vector<double> w(v->value.numel());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : w) x = u(rng);
    return [w](const Var<double>& y) {
      // 0.5 * (sum (y + w)^2 - sum y^2) = w . y + const, built from library ops.
      std::vector<double> neg_w(w.size()), zeros(w.size(), 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) neg_w[i] = -w[i];
      std::vector<Var<double>> terms{net::scale(net::squared_error_sum(y, std::span<const double>(neg_w)), 0.5),
                                     net::scale(net::squared_error_sum(y, std::span<const double>(zeros)), -0.5)};
      return net::add<double>(terms);
    };
  };

  {
    auto x = random_tensor({2, 9, 9}, rng), w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    auto p = project(net::conv2d(x, w, b, 2, 1));
    run("conv2d", [=] { return p(net::conv2d(x, w, b, 2, 1)); }, {x, w, b});
  }
  {
    auto x = random_tensor({2, 7, 7}, rng);
    auto p = project(net::max_pool2d(x, 3, 2));
    run("max_pool2d", [=] { return p(net::max_pool2d(x, 3, 2)); }, {x});
  }
  {
    auto x = random_tensor({20}, rng);
    auto p = project(x);
    run("relu", [=] { return p(net::relu(x)); }, {x});
    run("sigmoid", [=] { return p(net::sigmoid(x)); }, {x});
    run("scale", [=] { return p(net::scale(x, 1.7)); }, {x});
  }
  {
    auto t = random_tensor({3, 3, 3}, rng), s = random_tensor({3, 7, 7}, rng);
    auto p = project(net::cross_correlate(t, s));
    run("cross_correlate", [=] { return p(net::cross_correlate(t, s)); }, {t, s});
  }
  {
    auto x = random_tensor({5, 4}, rng), w = random_tensor({6, 4}, rng), b = random_tensor({6}, rng);
    auto p = project(net::linear(x, w, b));
    run("linear", [=] { return p(net::linear(x, w, b)); }, {x, w, b});
  }
  {
    auto x = random_tensor({6, 5}, rng);
    auto p = project(net::max_rows(x));
    run("max_rows", [=] { return p(net::max_rows(x)); }, {x});
    auto q = project(net::reshape(x, {5, 6}));
    run("reshape", [=] { return q(net::reshape(x, {5, 6})); }, {x});
    const std::vector<int> idx{3, 0, 17, 29, 3};
    auto g = project(net::gather(x, idx));
    run("gather", [=] { return g(net::gather(x, idx)); }, {x});
  }
  {
    auto a = random_tensor({4}, rng), b = random_tensor({2, 3}, rng);
    auto p = project(net::concat<double>(std::vector<Var<double>>{a, b}));
    run("concat", [=] { return p(net::concat<double>(std::vector<Var<double>>{a, b})); }, {a, b});
    auto c = random_tensor({2, 3}, rng);
    auto q = project(b);
    run("add", [=] { return q(net::add<double>(std::vector<Var<double>>{b, c})); }, {b, c});
  }
  {
    auto u = random_tensor({8}, rng), v = random_tensor({8}, rng);
    run("cosine_similarity", [=] { return net::cosine_similarity(u, v); }, {u, v});
  }
  {
    auto p = random_tensor({10}, rng, 0.05, 0.95);
    std::vector<double> t{1, 0, 1, 1, 0, 0, 1, 0, 1, 0};
    run("bce_sum", [=] { return net::bce_sum(p, std::span<const double>(t)); }, {p});
  }
  {
    auto x = random_tensor({10}, rng, -3.0, 3.0);
    std::vector<double> t(10, 0.2);
    run("smooth_l1_sum", [=] { return net::smooth_l1_sum(x, std::span<const double>(t)); }, {x});
    run("squared_error_sum", [=] { return net::squared_error_sum(x, std::span<const double>(t)); }, {x});
  }
  {
    auto pred = random_tensor({12, 3}, rng);
    std::vector<double> target;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 3 * 20; ++i) target.push_back(u(rng));
    run("chamfer_to", [=] { return net::chamfer_to(pred, std::span<const double>(target)); }, {pred});
  }

  if (include_composite) {
    SceneConfig sc;
    sc.n_tracklets = 1;
    sc.frames = 3;
    sc.seed = seed + 17;
    sc.lateral_min = 6.0;
    sc.lateral_max = 8.0;
    const auto data = generate_synthetic(sc);
    const auto& tl = data.tracklets.front();
    const auto crops = ground_truth_crops(tl);
    Rng srng(seed + 3);
    const auto sample = make_train_sample(tl, crops, 2, SampleConfig{}, srng);
    NetworkConfig nc;
    nc.init_seed = seed + 5;
    Networks<double> nets(nc);
    const LossWeights weights;
    auto objective = [&nets, &sample, weights] {
      return total_loss<double>(compute_losses<double>(nets, sample, 1.0, weights), weights);
    };
    std::vector<Var<double>> params;
    for (const char* name : {"backbone.conv1.w", "backbone.conv5.b", "rpn.cls_head.w", "rpn.reg_search.w",
                             "rpn.reg_head.b", "sim3d.mlp1.w", "sim3d.head.w", "sim3d.dec2.w"}) {
      params.push_back(nets.store.get(name));
    }
    nets.store.zero_grad();
    out.push_back({"weighted training objective", check_gradients(objective, params, rng, 3)});
  }
  return out;
}

}  // namespace bevtrack::testing
