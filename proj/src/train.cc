#include "bevtrack/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>

#include "bevtrack/errors.h"
#include "bevtrack/net/ops.h"

namespace bevtrack {

AnchorBatch select_training_anchors(const AnchorGrid& grid, const Rect& gt, Rng& rng) {
  std::vector<int> pos, mid, zero;
  std::vector<double> ious(grid.anchors.size());
  for (std::size_t i = 0; i < grid.anchors.size(); ++i) {
    const double iou = oriented_iou(grid.anchors[i].rect, gt);
    ious[i] = iou;
    if (iou > 0.5) {
      pos.push_back(static_cast<int>(i));
    } else if (iou > 0.0) {
      mid.push_back(static_cast<int>(i));
    } else {
      zero.push_back(static_cast<int>(i));
    }
  }
  if (pos.size() + mid.size() + zero.size() < kBatchAnchors) {
    throw InvalidArgument("select_training_anchors: fewer than 48 anchors available");
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(mid.begin(), mid.end(), rng);
  std::shuffle(zero.begin(), zero.end(), rng);

  const int n_pos = std::min<int>(kMaxPositives, static_cast<int>(pos.size()));
  const int n_mid = std::min<int>(kMidNegatives, static_cast<int>(mid.size()));
  int n_zero = std::min<int>(kBatchAnchors - n_pos - n_mid, static_cast<int>(zero.size()));
  // A short zero-overlap pool is topped up from whichever tier has spares.
  int extra_mid = 0, extra_pos = 0;
  int missing = kBatchAnchors - n_pos - n_mid - n_zero;
  if (missing > 0) {
    extra_mid = std::min<int>(missing, static_cast<int>(mid.size()) - n_mid);
    missing -= extra_mid;
    extra_pos = std::min<int>(missing, static_cast<int>(pos.size()) - n_pos);
  }

  AnchorBatch batch;
  auto push = [&](int idx, AnchorLabel label) {
    SampledAnchor e{idx, label, ious[idx], {}};
    if (label == AnchorLabel::kPositive) e.target = encode_delta(grid, grid.anchors[idx], gt);
    batch.entries.push_back(e);
  };
  for (int i = 0; i < n_pos + extra_pos; ++i) push(pos[i], AnchorLabel::kPositive);
  for (int i = 0; i < n_mid + extra_mid; ++i) push(mid[i], AnchorLabel::kMidNegative);
  for (int i = 0; i < n_zero; ++i) push(zero[i], AnchorLabel::kZeroNegative);
  batch.positives = n_pos + extra_pos;
  return batch;
}

template <typename T>
RpnLoss<T> rpn_loss(const typename RpnNet<T>::Output& out, const AnchorBatch& batch) {
  constexpr int cells = kGridSize * kGridSize;
  std::vector<int> cls_idx;
  std::vector<T> labels;
  std::vector<int> reg_idx;
  std::vector<T> reg_targets;
  for (const auto& e : batch.entries) {
    cls_idx.push_back(e.index);
    labels.push_back(e.label == AnchorLabel::kPositive ? T(1) : T(0));
    if (e.label == AnchorLabel::kPositive) {
      const int k = e.index / cells;
      const int cell = e.index % cells;
      reg_idx.push_back(2 * k * cells + cell);
      reg_idx.push_back((2 * k + 1) * cells + cell);
      reg_targets.push_back(static_cast<T>(e.target.dx));
      reg_targets.push_back(static_cast<T>(e.target.dz));
    }
  }
  RpnLoss<T> loss;
  const T nt = static_cast<T>(batch.entries.size());
  loss.cls = net::scale(net::bce_sum(net::gather(out.cls, cls_idx), std::span<const T>(labels)), T(1) / nt);
  if (batch.positives == 0) {
    loss.reg = net::constant<T>(net::Tensor<T>({1}, T(0)));
  } else {
    const T np = static_cast<T>(batch.positives);
    loss.reg = net::scale(net::smooth_l1_sum(net::gather(out.reg, reg_idx), std::span<const T>(reg_targets)),
                          T(1) / (T(2) * np));
  }
  return loss;
}

template <typename T>
net::Var<T> tracking_loss(std::span<const net::Var<T>> candidate_latents, const net::Var<T>& model_latent,
                          std::span<const Rect> candidate_rects, const Rect& gt, double sigma) {
  if (candidate_latents.size() != candidate_rects.size()) {
    throw InvalidArgument("tracking_loss: latent and rect counts differ");
  }
  std::vector<net::Var<T>> sims;
  std::vector<T> targets;
  for (std::size_t i = 0; i < candidate_latents.size(); ++i) {
    if (!candidate_latents[i]) continue;
    sims.push_back(net::cosine_similarity(candidate_latents[i], model_latent));
    targets.push_back(static_cast<T>(gaussian_score(center_distance(candidate_rects[i].pose(), gt.pose()), sigma)));
  }
  if (sims.empty()) return net::constant<T>(net::Tensor<T>({1}, T(0)));
  auto stacked = net::concat<T>(sims);
  return net::scale(net::squared_error_sum(stacked, std::span<const T>(targets)),
                    T(1) / static_cast<T>(sims.size()));
}

template <typename T>
net::Var<T> completion_loss(const ShapeNet<T>& shape, const net::Var<T>& model_latent,
                            std::span<const Point3> target) {
  if (target.empty()) {
    spdlog::warn("completion_loss: empty target, term skipped");
    return net::constant<T>(net::Tensor<T>({1}, T(0)));
  }
  std::vector<T> xyz;
  xyz.reserve(3 * target.size());
  for (const auto& p : target) {
    xyz.push_back(static_cast<T>(p.x));
    xyz.push_back(static_cast<T>(p.y));
    xyz.push_back(static_cast<T>(p.z));
  }
  return net::chamfer_to(shape.decode(model_latent), std::span<const T>(xyz));
}

template <typename T>
net::Var<T> total_loss(const LossParts<T>& parts, const LossWeights& weights) {
  std::vector<net::Var<T>> terms;
  auto add_term = [&](const net::Var<T>& v, double w) {
    if (w != 0.0 && v) terms.push_back(net::scale(v, static_cast<T>(w)));
  };
  add_term(parts.cls, weights.cls);
  add_term(parts.reg, weights.reg);
  add_term(parts.tr, weights.tr);
  add_term(parts.comp, weights.comp);
  if (terms.empty()) return net::constant<T>(net::Tensor<T>({1}, T(0)));
  return net::add<T>(terms);
}

std::vector<PointCloud> ground_truth_crops(const Tracklet& tracklet) {
  std::vector<PointCloud> crops;
  crops.reserve(tracklet.frames.size());
  for (std::size_t t = 0; t < tracklet.frames.size(); ++t) {
    crops.push_back(crop_points_in_box(tracklet.frames[t], tracklet.gt[t]));
  }
  return crops;
}

TrainSample make_train_sample(const Tracklet& tracklet, std::span<const PointCloud> gt_crops, int t,
                              const SampleConfig& cfg, Rng& rng) {
  if (t < 1 || t >= static_cast<int>(tracklet.frames.size())) {
    throw InvalidArgument("make_train_sample: frame index out of range");
  }
  const Box3d& prev = tracklet.gt[t - 1];
  const Box3d& cur = tracklet.gt[t];
  const BoxSpec spec = tracklet.gt[0].spec;
  const double y_center = tracklet.gt[0].y_center;

  TrainSample s;
  s.search_bev = rasterize_bev(tracklet.frames[t], prev.pose, y_center, cfg.bev.search_extent, cfg.bev.search_px,
                               cfg.bev);
  PointCloud model_pc = aggregate_model(Aggregation::kAll, gt_crops.subspan(0, t));
  s.model_bev = rasterize_bev(model_pc, PoseBev{}, 0.0, cfg.bev.model_extent, cfg.bev.model_px, cfg.bev);
  s.grid = build_anchor_grid(prev.pose, spec, s.search_bev, cfg.rpn);
  s.gt = project_to_bev(cur);
  s.batch = select_training_anchors(s.grid, s.gt, rng);

  for (const auto& e : s.batch.entries) {
    const Rect& r = s.grid.anchors[e.index].rect;
    s.candidate_rects.push_back(r);
    const auto crop = crop_points_in_box(tracklet.frames[t], lift_to_3d(r, spec, y_center));
    s.candidate_shapes.push_back(crop.empty() ? ShapeSample{} : resample_fixed(crop, rng));
  }
  if (!model_pc.empty()) s.model_shape = resample_fixed(model_pc, rng);
  const PointCloud all = aggregate_model(Aggregation::kAll, gt_crops);
  if (!all.empty()) s.completion_target = resample_fixed(all, rng).points;
  return s;
}

template <typename T>
LossParts<T> compute_losses(const Networks<T>& nets, const TrainSample& sample, double sigma,
                            const LossWeights& weights) {
  LossParts<T> parts;
  const auto model_fm = nets.rpn.embed(sample.model_bev);
  const auto search_fm = nets.rpn.embed(sample.search_bev);
  const auto out = nets.rpn.forward(model_fm, search_fm);
  const auto rl = rpn_loss<T>(out, sample.batch);
  parts.cls = rl.cls;
  parts.reg = rl.reg;

  if (sample.model_shape.points.empty()) {
    parts.tr = net::constant<T>(net::Tensor<T>({1}, T(0)));
    parts.comp = net::constant<T>(net::Tensor<T>({1}, T(0)));
    return parts;
  }
  const auto model_latent = nets.shape.encode(sample.model_shape);
  std::vector<net::Var<T>> latents;
  latents.reserve(sample.candidate_shapes.size());
  for (const auto& c : sample.candidate_shapes) {
    latents.push_back(c.points.empty() ? net::Var<T>{} : nets.shape.encode(c));
  }
  parts.tr = tracking_loss<T>(latents, model_latent, sample.candidate_rects, sample.gt, sigma);
  parts.comp = completion_loss<T>(nets.shape, model_latent, sample.completion_target);
  if (weights.complete_candidates && !sample.completion_target.empty()) {
    std::vector<net::Var<T>> terms{parts.comp};
    for (std::size_t i = 0; i < latents.size(); ++i) {
      if (latents[i] && sample.batch.entries[i].label == AnchorLabel::kPositive) {
        terms.push_back(completion_loss<T>(nets.shape, latents[i], sample.completion_target));
      }
    }
    if (terms.size() > 1) parts.comp = net::scale<T>(net::add<T>(terms), T(1) / static_cast<T>(terms.size()));
  }
  return parts;
}

namespace {

struct StepRef {
  int tracklet;
  int frame;
};

double value_of(const net::Var<float>& v) { return v ? static_cast<double>(v->value.data[0]) : 0.0; }

}  // namespace

FitResult fit(const SequenceDataset& data, const FitConfig& cfg, Networks<float>& nets, const FitProgress& progress) {
  std::vector<int> usable;
  for (std::size_t i = 0; i < data.tracklets.size(); ++i) {
    if (data.tracklets[i].frames.size() >= 2) usable.push_back(static_cast<int>(i));
  }
  if (usable.empty()) throw InvalidArgument("fit: dataset has no tracklet with at least two frames");

  // Split by tracklet id so the partition does not depend on file order.
  std::sort(usable.begin(), usable.end(),
            [&](int a, int b) { return data.tracklets[a].id < data.tracklets[b].id; });
  Rng split_rng(cfg.seed);
  std::shuffle(usable.begin(), usable.end(), split_rng);
  int n_val = static_cast<int>(std::floor(cfg.val_fraction * usable.size() + 0.5));
  n_val = std::clamp(n_val, 0, static_cast<int>(usable.size()) - 1);
  std::vector<int> val_set(usable.begin(), usable.begin() + n_val);
  std::vector<int> train_set(usable.begin() + n_val, usable.end());

  FitResult result;
  for (int i : train_set) result.train_ids.push_back(data.tracklets[i].id);
  for (int i : val_set) result.val_ids.push_back(data.tracklets[i].id);

  std::vector<std::vector<PointCloud>> crops(data.tracklets.size());
  for (int i : usable) crops[i] = ground_truth_crops(data.tracklets[i]);

  std::vector<StepRef> steps;
  const int stride = std::max(1, cfg.frame_stride);
  for (int i : train_set) {
    const int n = static_cast<int>(data.tracklets[i].frames.size());
    for (int t = 1; t < n; t += stride) steps.push_back({i, t});
  }
  std::vector<StepRef> val_steps;
  for (int i : val_set) {
    const int n = static_cast<int>(data.tracklets[i].frames.size());
    for (int t = 1; t < n; ++t) val_steps.push_back({i, t});
  }
  {
    Rng vr(cfg.seed ^ 0x5eedULL);
    std::shuffle(val_steps.begin(), val_steps.end(), vr);
    if (static_cast<int>(val_steps.size()) > cfg.max_val_frames) val_steps.resize(cfg.max_val_frames);
  }

  net::PlateauSchedule sched;
  sched.lr = cfg.lr;
  sched.factor = cfg.plateau_factor;
  sched.patience = cfg.plateau_patience;

  Rng rng(cfg.seed + 1);
  int global_step = 0;
  const int total_epochs = cfg.pretrain_epochs + cfg.epochs;
  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    const bool pretrain = epoch < cfg.pretrain_epochs;
    const double lr = pretrain ? cfg.pretrain_lr : sched.lr;
    std::shuffle(steps.begin(), steps.end(), rng);
    for (const auto& st : steps) {
      const auto sample = make_train_sample(data.tracklets[st.tracklet], crops[st.tracklet], st.frame, cfg.sample, rng);
      const auto parts = compute_losses<float>(nets, sample, cfg.sigma, cfg.weights);
      const auto total = total_loss<float>(parts, cfg.weights);
      nets.store.zero_grad();
      net::backward(total);
      if (cfg.grad_clip > 0.0) net::clip_grad_norm(nets.store, cfg.grad_clip);
      net::sgd_step(nets.store, lr, cfg.momentum);

      LossRow row{epoch, global_step++, value_of(parts.cls), value_of(parts.reg), value_of(parts.tr),
                  value_of(parts.comp), value_of(total), lr};
      result.history.push_back(row);
      if (progress) progress(row);
    }

    double val_loss = 0.0;
    if (!val_steps.empty()) {
      nets.store.set_requires_grad(false);
      Rng vr(cfg.seed ^ 0xba11ULL);
      for (const auto& st : val_steps) {
        const auto sample = make_train_sample(data.tracklets[st.tracklet], crops[st.tracklet], st.frame, cfg.sample, vr);
        val_loss += value_of(total_loss<float>(compute_losses<float>(nets, sample, cfg.sigma, cfg.weights), cfg.weights));
      }
      val_loss /= static_cast<double>(val_steps.size());
      nets.store.set_requires_grad(true);
    } else {
      double sum = 0.0;
      int n = 0;
      for (const auto& row : result.history) {
        if (row.epoch == epoch) {
          sum += row.total;
          ++n;
        }
      }
      val_loss = n ? sum / n : 0.0;
    }
    result.validation.push_back(val_loss);
    if (!pretrain) net::lr_plateau_update(sched, val_loss);
    spdlog::info("epoch {} done: validation loss {:.6g}, lr {:.3g}", epoch, val_loss,
                 pretrain ? cfg.pretrain_lr : sched.lr);
  }
  return result;
}

std::string loss_history_csv(const std::vector<LossRow>& rows) {
  std::string out = "epoch,step,l_cls,l_reg,l_tr,l_comp,total,lr\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.step, r.l_cls, r.l_reg, r.l_tr,
                  r.l_comp, r.total, r.lr);
    out += buf;
  }
  return out;
}

template RpnLoss<float> rpn_loss<float>(const RpnNet<float>::Output&, const AnchorBatch&);
template RpnLoss<double> rpn_loss<double>(const RpnNet<double>::Output&, const AnchorBatch&);
template net::Var<float> tracking_loss<float>(std::span<const net::Var<float>>, const net::Var<float>&,
                                              std::span<const Rect>, const Rect&, double);
template net::Var<double> tracking_loss<double>(std::span<const net::Var<double>>, const net::Var<double>&,
                                                std::span<const Rect>, const Rect&, double);
template net::Var<float> completion_loss<float>(const ShapeNet<float>&, const net::Var<float>&,
                                                std::span<const Point3>);
template net::Var<double> completion_loss<double>(const ShapeNet<double>&, const net::Var<double>&,
                                                  std::span<const Point3>);
template net::Var<float> total_loss<float>(const LossParts<float>&, const LossWeights&);
template net::Var<double> total_loss<double>(const LossParts<double>&, const LossWeights&);
template LossParts<float> compute_losses<float>(const Networks<float>&, const TrainSample&, double,
                                                const LossWeights&);
template LossParts<double> compute_losses<double>(const Networks<double>&, const TrainSample&, double,
                                                  const LossWeights&);

}  // namespace bevtrack
