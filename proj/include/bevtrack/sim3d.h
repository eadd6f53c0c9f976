#pragma once

#include <span>
#include <vector>

#include "bevtrack/geom.h"
#include "bevtrack/net/optim.h"
#include "bevtrack/net/tensor.h"

namespace bevtrack {

struct ShapeNetConfig {
  std::vector<int> mlp{64, 128, 256};
  int latent = 128;
  int decoder_hidden = 256;
  int decoder_points = 1024;
};

// PointNet-style encoder (shared per-point MLP, max-pool, linear head) and a
// fully-connected completion decoder.
template <typename T>
class ShapeNet {
 public:
  ShapeNet(const ShapeNetConfig& cfg, net::ParamStore<T>& store, Rng& rng);

  const ShapeNetConfig& config() const { return cfg_; }

  // Encodes the distinct points of the sample. Max-pooling makes duplicates
  // irrelevant, so the result equals encoding the full sample.
  net::Var<T> encode(const ShapeSample& s) const;

  // Encodes an n x 3 tensor directly (n >= 1).
  net::Var<T> encode_points(const net::Var<T>& points) const;

  // Per-point features and the max-pooled global feature of the shared MLP.
  struct MlpOut {
    net::Var<T> per_point;
    net::Var<T> global;
  };
  MlpOut point_shared_mlp(const net::Var<T>& points) const;

  // latent (K) -> M x 3 points in the canonical frame.
  net::Var<T> decode(const net::Var<T>& latent) const;

 private:
  ShapeNetConfig cfg_;
  std::vector<net::Var<T>> mlp_w_, mlp_b_;
  net::Var<T> head_w_, head_b_;
  net::Var<T> dec1_w_, dec1_b_, dec2_w_, dec2_b_;
};

// Sorted distinct points as an n x 3 tensor.
template <typename T>
net::Var<T> unique_points_tensor(std::span<const Point3> points);

// Cosine similarity of two latent vectors. Throws InvalidArgument on zero norm.
double similarity(std::span<const float> candidate, std::span<const float> model);

struct Ranking {
  int best_index = -1;
  std::vector<double> scores;
};

// Scores each candidate against the model latent; candidates with no points
// score -1. Ties resolve to the lowest index. Throws InvalidArgument when empty.
Ranking rank_candidates(const ShapeNet<float>& net, std::span<const float> model_latent,
                        std::span<const ShapeSample> candidates);

std::vector<float> latent_values(const net::Var<float>& v);

}  // namespace bevtrack
