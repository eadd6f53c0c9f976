#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bevtrack/bev.h"
#include "bevtrack/dataset.h"
#include "bevtrack/networks.h"
#include "bevtrack/rpn2d.h"

namespace bevtrack {

inline constexpr int kBatchAnchors = 48;
inline constexpr int kMaxPositives = 16;
inline constexpr int kMidNegatives = 16;

enum class AnchorLabel { kPositive, kMidNegative, kZeroNegative };

struct SampledAnchor {
  int index = 0;
  AnchorLabel label = AnchorLabel::kZeroNegative;
  double iou = 0.0;
  Delta target;  // meaningful for positives only
};

struct AnchorBatch {
  std::vector<SampledAnchor> entries;
  int positives = 0;
};

// 48 anchors: up to 16 with IoU in (0.5, 1], 16 with IoU in (0, 0.5], and the
// rest (16 plus any positive or mid shortfall) with zero overlap.
AnchorBatch select_training_anchors(const AnchorGrid& grid, const Rect& gt, Rng& rng);

struct LossWeights {
  double cls = 1e-2;
  double reg = 1.0;
  double tr = 1e-2;
  double comp = 1e-6;
  // Completion decodes the model latent only; when set, positive candidates
  // are decoded too and the term is their mean with the model's.
  bool complete_candidates = false;
};

template <typename T>
struct RpnLoss {
  net::Var<T> cls;  // (1/Nt) sum BCE
  net::Var<T> reg;  // (1/(2 Np)) sum Smooth-L1 over x and z
};

template <typename T>
RpnLoss<T> rpn_loss(const typename RpnNet<T>::Output& out, const AnchorBatch& batch);

// Mean over non-empty candidates of (cos(candidate, model) - rho(d))^2 where d
// is the candidate-to-ground-truth center distance. Empty candidates carry no
// latent and are skipped.
template <typename T>
net::Var<T> tracking_loss(std::span<const net::Var<T>> candidate_latents, const net::Var<T>& model_latent,
                          std::span<const Rect> candidate_rects, const Rect& gt, double sigma);

// Chamfer between the decoded model latent and the target cloud.
template <typename T>
net::Var<T> completion_loss(const ShapeNet<T>& shape, const net::Var<T>& model_latent,
                            std::span<const Point3> target);

template <typename T>
struct LossParts {
  net::Var<T> cls, reg, tr, comp;
};

// Weighted sum; zero-weight terms are left out of the graph entirely.
template <typename T>
net::Var<T> total_loss(const LossParts<T>& parts, const LossWeights& weights);

// Everything one training step needs from a single frame.
struct TrainSample {
  BevImage model_bev{1, 1, 1.0, {}};
  BevImage search_bev{1, 1, 1.0, {}};
  AnchorGrid grid;
  Rect gt;
  AnchorBatch batch;
  std::vector<ShapeSample> candidate_shapes;  // one per batch entry; empty when the box holds no points
  std::vector<Rect> candidate_rects;
  ShapeSample model_shape;
  PointCloud completion_target;
};

struct SampleConfig {
  BevConfig bev;
  RpnConfig rpn;
};

// Builds the sample for frame t >= 1: search region centred on the t-1 ground
// truth, model from the ground-truth crops of frames < t, completion target
// from the crops of the whole tracklet.
TrainSample make_train_sample(const Tracklet& tracklet, std::span<const PointCloud> gt_crops, int t,
                              const SampleConfig& cfg, Rng& rng);

// Canonical-frame ground-truth crop of every frame.
std::vector<PointCloud> ground_truth_crops(const Tracklet& tracklet);

template <typename T>
LossParts<T> compute_losses(const Networks<T>& nets, const TrainSample& sample, double sigma,
                            const LossWeights& weights);

struct FitConfig {
  NetworkConfig network;
  SampleConfig sample;
  LossWeights weights;
  double sigma = 1.0;
  int epochs = 3;
  double lr = 1e-4;
  double momentum = 0.9;
  int plateau_patience = 2;
  double plateau_factor = 10.0;
  // Optional warm-up at a larger rate before the plateau-scheduled phase;
  // stands in for the pretrained backbone.
  int pretrain_epochs = 0;
  double pretrain_lr = 1e-2;
  double grad_clip = 10.0;  // 0 disables
  double val_fraction = 0.1;
  int max_val_frames = 200;
  int frame_stride = 1;  // use every n-th frame per epoch
  std::uint64_t seed = 1;
};

struct LossRow {
  int epoch = 0;
  int step = 0;
  double l_cls = 0.0, l_reg = 0.0, l_tr = 0.0, l_comp = 0.0, total = 0.0;
  double lr = 0.0;
};

struct FitResult {
  std::vector<LossRow> history;
  std::vector<double> validation;  // one per epoch
  std::vector<std::string> train_ids, val_ids;
};

using FitProgress = std::function<void(const LossRow&)>;

// Splits tracklets by id (val_fraction, seeded) and trains with SGD momentum.
// Throws InvalidArgument if no tracklet has at least two frames.
FitResult fit(const SequenceDataset& data, const FitConfig& cfg, Networks<float>& nets,
              const FitProgress& progress = {});

std::string loss_history_csv(const std::vector<LossRow>& rows);

}  // namespace bevtrack
