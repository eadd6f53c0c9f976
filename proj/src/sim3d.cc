#include "bevtrack/sim3d.h"

#include <algorithm>
#include <cmath>

#include "bevtrack/errors.h"
#include "bevtrack/net/ops.h"

namespace bevtrack {

template <typename T>
ShapeNet<T>::ShapeNet(const ShapeNetConfig& cfg, net::ParamStore<T>& store, Rng& rng) : cfg_(cfg) {
  int in = 3;
  for (std::size_t i = 0; i < cfg.mlp.size(); ++i) {
    const std::string name = "sim3d.mlp" + std::to_string(i + 1);
    mlp_w_.push_back(store.add_weight(name + ".w", {cfg.mlp[i], in}, in, rng));
    mlp_b_.push_back(store.add_constant_init(name + ".b", {cfg.mlp[i]}, T(0)));
    in = cfg.mlp[i];
  }
  head_w_ = store.add_weight("sim3d.head.w", {cfg.latent, in}, in, rng);
  head_b_ = store.add_constant_init("sim3d.head.b", {cfg.latent}, T(0));
  dec1_w_ = store.add_weight("sim3d.dec1.w", {cfg.decoder_hidden, cfg.latent}, cfg.latent, rng);
  dec1_b_ = store.add_constant_init("sim3d.dec1.b", {cfg.decoder_hidden}, T(0));
  dec2_w_ = store.add_weight("sim3d.dec2.w", {3 * cfg.decoder_points, cfg.decoder_hidden}, cfg.decoder_hidden, rng);
  dec2_b_ = store.add_constant_init("sim3d.dec2.b", {3 * cfg.decoder_points}, T(0));
  // Start the decoder near a compact blob instead of a 10 m cloud.
  for (auto& v : dec2_w_->value.data) v *= T(0.1);
}

template <typename T>
typename ShapeNet<T>::MlpOut ShapeNet<T>::point_shared_mlp(const net::Var<T>& points) const {
  const auto& s = points->shape();
  if (s.size() != 2 || s[1] != 3) throw ShapeError("point_shared_mlp: expected n x 3 points");
  if (s[0] < 1) throw InvalidArgument("point_shared_mlp: need at least one point");
  net::Var<T> x = points;
  for (std::size_t i = 0; i < mlp_w_.size(); ++i) x = net::relu(net::linear(x, mlp_w_[i], mlp_b_[i]));
  return {x, net::max_rows(x)};
}

template <typename T>
net::Var<T> ShapeNet<T>::encode_points(const net::Var<T>& points) const {
  auto global = point_shared_mlp(points).global;
  const int width = global->value.dim(0);
  auto g = net::reshape(global, {1, width});
  return net::reshape(net::linear(g, head_w_, head_b_), {cfg_.latent});
}

template <typename T>
net::Var<T> unique_points_tensor(std::span<const Point3> points) {
  std::vector<Point3> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  net::Tensor<T> t({static_cast<int>(sorted.size()), 3});
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    t.data[3 * i] = static_cast<T>(sorted[i].x);
    t.data[3 * i + 1] = static_cast<T>(sorted[i].y);
    t.data[3 * i + 2] = static_cast<T>(sorted[i].z);
  }
  return net::constant<T>(std::move(t));
}

template <typename T>
net::Var<T> ShapeNet<T>::encode(const ShapeSample& s) const {
  if (s.points.empty()) throw EmptyShape("encode: empty shape sample");
  return encode_points(unique_points_tensor<T>(s.points));
}

template <typename T>
net::Var<T> ShapeNet<T>::decode(const net::Var<T>& latent) const {
  if (latent->value.numel() != static_cast<std::size_t>(cfg_.latent)) {
    throw ShapeError("decode: latent size mismatch");
  }
  auto z = net::reshape(latent, {1, cfg_.latent});
  auto h = net::relu(net::linear(z, dec1_w_, dec1_b_));
  auto out = net::linear(h, dec2_w_, dec2_b_);
  return net::reshape(out, {cfg_.decoder_points, 3});
}

double similarity(std::span<const float> candidate, std::span<const float> model) {
  if (candidate.size() != model.size()) throw InvalidArgument("similarity: latent size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    dot += static_cast<double>(candidate[i]) * model[i];
    na += static_cast<double>(candidate[i]) * candidate[i];
    nb += static_cast<double>(model[i]) * model[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("similarity: zero-norm latent");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<float> latent_values(const net::Var<float>& v) {
  return {v->value.data.begin(), v->value.data.end()};
}

Ranking rank_candidates(const ShapeNet<float>& net, std::span<const float> model_latent,
                        std::span<const ShapeSample> candidates) {
  if (candidates.empty()) throw InvalidArgument("rank_candidates: no candidates");
  Ranking r;
  r.scores.resize(candidates.size(), -1.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].points.empty()) continue;
    const auto latent = latent_values(net.encode(candidates[i]));
    double score = -1.0;
    try {
      score = similarity(latent, model_latent);
    } catch (const InvalidArgument&) {
      score = -1.0;
    }
    r.scores[i] = score;
  }
  r.best_index = 0;
  for (std::size_t i = 1; i < r.scores.size(); ++i) {
    if (r.scores[i] > r.scores[r.best_index]) r.best_index = static_cast<int>(i);
  }
  return r;
}

template class ShapeNet<float>;
template class ShapeNet<double>;
template net::Var<float> unique_points_tensor<float>(std::span<const Point3>);
template net::Var<double> unique_points_tensor<double>(std::span<const Point3>);

}  // namespace bevtrack
