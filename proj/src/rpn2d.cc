#include "bevtrack/rpn2d.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bevtrack/errors.h"
#include "bevtrack/net/ops.h"

namespace bevtrack {

namespace {
constexpr int kCenterCell = kGridSize / 2;
constexpr double kDegToRad = std::numbers::pi / 180.0;
}  // namespace

AnchorGrid build_anchor_grid(const PoseBev& prev, const BoxSpec& spec, const BevImage& search_image,
                             const RpnConfig& cfg) {
  AnchorGrid grid;
  grid.center = prev;
  grid.stride_m = kBackboneStride * search_image.resolution();
  grid.anchors.resize(kAnchorCount);
  const double c = std::cos(prev.theta);
  const double s = std::sin(prev.theta);
  for (int k = 0; k < kAnchorsPerCell; ++k) {
    const double theta = normalize_angle(prev.theta + cfg.angle_offsets_deg[k] * kDegToRad);
    for (int row = 0; row < kGridSize; ++row) {
      for (int col = 0; col < kGridSize; ++col) {
        Anchor& a = grid.anchors[anchor_index(k, row, col)];
        a.crop_x = (col - kCenterCell) * grid.stride_m;
        a.crop_z = (row - kCenterCell) * grid.stride_m;
        a.row = row;
        a.col = col;
        a.k = k;
        a.rect = {prev.x + c * a.crop_x - s * a.crop_z, prev.z + s * a.crop_x + c * a.crop_z, theta, spec.w,
                  spec.l};
      }
    }
  }
  return grid;
}

Delta encode_delta(const AnchorGrid& grid, const Anchor& anchor, const Rect& gt) {
  const double c = std::cos(grid.center.theta);
  const double s = std::sin(grid.center.theta);
  const double dx = gt.x - grid.center.x;
  const double dz = gt.z - grid.center.z;
  const double gx = c * dx + s * dz;
  const double gz = -s * dx + c * dz;
  return {(gx - anchor.crop_x) / anchor.rect.w, (gz - anchor.crop_z) / anchor.rect.l};
}

Rect decode_delta(const AnchorGrid& grid, const Anchor& anchor, Delta d) {
  const double c = std::cos(grid.center.theta);
  const double s = std::sin(grid.center.theta);
  const double px = anchor.crop_x + d.dx * anchor.rect.w;
  const double pz = anchor.crop_z + d.dz * anchor.rect.l;
  Rect r = anchor.rect;
  r.x = grid.center.x + c * px - s * pz;
  r.z = grid.center.z + s * px + c * pz;
  return r;
}

Delta RpnScores::delta(int anchor) const {
  constexpr int cells = kGridSize * kGridSize;
  const int k = anchor / cells;
  const int cell = anchor % cells;
  return {reg[(2 * k) * cells + cell], reg[(2 * k + 1) * cells + cell]};
}

double hann2d(int row, int col) {
  auto hann = [](int n) { return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (kGridSize - 1)); };
  return hann(row) * hann(col);
}

std::vector<Proposal> decode_and_rank(const RpnScores& out, const AnchorGrid& grid, double window_weight,
                                      int count) {
  if (count <= 0) throw InvalidArgument("decode_and_rank: count must be positive");
  if (out.cls.size() != kAnchorCount || out.reg.size() != 2 * kAnchorCount ||
      grid.anchors.size() != kAnchorCount) {
    throw ShapeError("decode_and_rank: expected 1445 anchors");
  }
  const int c = std::min(count, kAnchorCount);
  std::vector<double> windowed(kAnchorCount);
  for (int i = 0; i < kAnchorCount; ++i) {
    const Anchor& a = grid.anchors[i];
    windowed[i] = (1.0 - window_weight) * out.cls[i] + window_weight * hann2d(a.row, a.col);
  }
  std::vector<int> order(kAnchorCount);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + c, order.end(), [&](int a, int b) {
    if (windowed[a] != windowed[b]) return windowed[a] > windowed[b];
    return a < b;
  });
  std::vector<Proposal> props;
  props.reserve(c);
  for (int i = 0; i < c; ++i) {
    const int idx = order[i];
    props.push_back({decode_delta(grid, grid.anchors[idx], out.delta(idx)), out.cls[idx], windowed[idx], idx});
  }
  return props;
}

template <typename T>
net::Var<T> bev_to_tensor(const BevImage& image) {
  const auto src = image.data();
  net::Tensor<T> t({image.channels(), image.size(), image.size()});
  std::transform(src.begin(), src.end(), t.data.begin(), [](float v) { return static_cast<T>(v); });
  return net::constant<T>(std::move(t));
}

template <typename T>
typename RpnNet<T>::ConvParams RpnNet<T>::conv(net::ParamStore<T>& store, const std::string& name, int out,
                                               int in, int k, Rng& rng) {
  ConvParams p;
  p.w = store.add_weight(name + ".w", {out, in, k, k}, in * k * k, rng);
  p.b = store.add_constant_init(name + ".b", {out}, T(0));
  return p;
}

template <typename T>
RpnNet<T>::RpnNet(const RpnConfig& cfg, net::ParamStore<T>& store, Rng& rng) : cfg_(cfg) {
  static constexpr std::array<int, 5> kKernels{11, 5, 3, 3, 3};
  int in = cfg.in_channels;
  for (int i = 0; i < 5; ++i) {
    backbone_[i] = conv(store, "backbone.conv" + std::to_string(i + 1), cfg.widths[i], in, kKernels[i], rng);
    in = cfg.widths[i];
  }
  const int d = cfg.widths[4];
  cls_model_ = conv(store, "rpn.cls_model", d, d, 3, rng);
  cls_search_ = conv(store, "rpn.cls_search", d, d, 3, rng);
  reg_model_ = conv(store, "rpn.reg_model", d, d, 3, rng);
  reg_search_ = conv(store, "rpn.reg_search", d, d, 3, rng);
  cls_head_ = conv(store, "rpn.cls_head", kAnchorsPerCell, d, 1, rng);
  reg_head_ = conv(store, "rpn.reg_head", 2 * kAnchorsPerCell, d, 1, rng);
  // Small regression head so initial deltas start near the anchor priors.
  for (auto& v : reg_head_.w->value.data) v *= T(0.01);
}

template <typename T>
net::Var<T> RpnNet<T>::embed(const net::Var<T>& image) const {
  const auto& s = image->shape();
  if (s.size() != 3 || s[0] != cfg_.in_channels || s[1] != s[2] || (s[1] != 127 && s[1] != 255)) {
    throw ShapeError("embed: expected " + std::to_string(cfg_.in_channels) + "x127x127 or x255x255 input, got " +
                     net::shape_str(s));
  }
  auto x = net::relu(net::conv2d(image, backbone_[0].w, backbone_[0].b, 2, 0));
  x = net::max_pool2d(x, 3, 2);
  x = net::relu(net::conv2d(x, backbone_[1].w, backbone_[1].b, 1, 0));
  x = net::max_pool2d(x, 3, 2);
  x = net::relu(net::conv2d(x, backbone_[2].w, backbone_[2].b, 1, 0));
  x = net::relu(net::conv2d(x, backbone_[3].w, backbone_[3].b, 1, 0));
  return net::conv2d(x, backbone_[4].w, backbone_[4].b, 1, 0);
}

template <typename T>
net::Var<T> RpnNet<T>::embed(const BevImage& image) const {
  return embed(bev_to_tensor<T>(image));
}

template <typename T>
typename RpnNet<T>::Output RpnNet<T>::forward(const net::Var<T>& model_fm, const net::Var<T>& search_fm) const {
  const auto& ms = model_fm->shape();
  const auto& ss = search_fm->shape();
  const int d = feature_depth();
  if (ms.size() != 3 || ss.size() != 3 || ms[0] != d || ss[0] != d ||
      ss[1] - ms[1] + 1 != kGridSize || ss[2] - ms[2] + 1 != kGridSize) {
    throw ShapeError("rpn_forward: feature maps " + net::shape_str(ms) + " / " + net::shape_str(ss) +
                     " do not correlate to 17x17");
  }
  const T norm = T(1) / static_cast<T>(ms[1] * ms[2]);
  auto branch = [&](const ConvParams& mp, const ConvParams& sp, const ConvParams& head) {
    auto m = net::relu(net::conv2d(model_fm, mp.w, mp.b, 1, 1));
    auto s = net::relu(net::conv2d(search_fm, sp.w, sp.b, 1, 1));
    auto corr = net::scale(net::cross_correlate(m, s), norm);
    return net::conv2d(corr, head.w, head.b, 1, 0);
  };
  Output out;
  out.cls = net::sigmoid(branch(cls_model_, cls_search_, cls_head_));
  out.reg = branch(reg_model_, reg_search_, reg_head_);
  return out;
}

template <typename T>
RpnScores RpnNet<T>::scores(const Output& out) {
  RpnScores s;
  s.cls.assign(out.cls->value.data.begin(), out.cls->value.data.end());
  s.reg.assign(out.reg->value.data.begin(), out.reg->value.data.end());
  return s;
}

template class RpnNet<float>;
template class RpnNet<double>;
template net::Var<float> bev_to_tensor<float>(const BevImage&);
template net::Var<double> bev_to_tensor<double>(const BevImage&);

}  // namespace bevtrack
