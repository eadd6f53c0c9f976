#pragma once

#include <array>
#include <span>
#include <vector>

#include "bevtrack/bev.h"
#include "bevtrack/geom.h"
#include "bevtrack/net/optim.h"
#include "bevtrack/net/tensor.h"

namespace bevtrack {

inline constexpr int kGridSize = 17;
inline constexpr int kAnchorsPerCell = 5;
inline constexpr int kAnchorCount = kGridSize * kGridSize * kAnchorsPerCell;  // 1445
inline constexpr int kBackboneStride = 8;

struct RpnConfig {
  // Output widths of the five backbone convolutions.
  std::array<int, 5> widths{16, 32, 32, 32, 64};
  int in_channels = 3;
  std::array<double, kAnchorsPerCell> angle_offsets_deg{-5.0, -2.5, 0.0, 2.5, 5.0};
  double window_weight = 0.3;
};

// One oriented anchor. `crop_x`/`crop_z` are offsets from the grid center in the
// search-crop frame.
struct Anchor {
  Rect rect;
  double crop_x = 0.0;
  double crop_z = 0.0;
  int row = 0;  // crop z cell
  int col = 0;  // crop x cell
  int k = 0;    // heading offset index
};

// Anchor index layout: k * 289 + row * 17 + col, matching the channel-major
// classification map.
struct AnchorGrid {
  PoseBev center;
  double stride_m = 0.0;
  std::vector<Anchor> anchors;
};

inline int anchor_index(int k, int row, int col) { return (k * kGridSize + row) * kGridSize + col; }

AnchorGrid build_anchor_grid(const PoseBev& prev, const BoxSpec& spec, const BevImage& search_image,
                             const RpnConfig& cfg = {});

struct Delta {
  double dx = 0.0;
  double dz = 0.0;
};

// Regression target of `gt` relative to `anchor`, normalized by (w, l).
Delta encode_delta(const AnchorGrid& grid, const Anchor& anchor, const Rect& gt);
// Anchor prior plus scaled delta; heading stays the anchor's.
Rect decode_delta(const AnchorGrid& grid, const Anchor& anchor, Delta d);

// Plain copies of the network heads: cls[k*289 + cell], reg[(2k + {0,1})*289 + cell].
struct RpnScores {
  std::vector<float> cls;
  std::vector<float> reg;

  Delta delta(int anchor) const;
};

struct Proposal {
  Rect rect;
  double raw_score = 0.0;
  double windowed_score = 0.0;
  int anchor_index = 0;
};

// 2D Hann window value at grid cell (row, col), in [0, 1], peak 1 at the center.
double hann2d(int row, int col);

// Top-C proposals sorted by windowed score (descending), ties by anchor index.
std::vector<Proposal> decode_and_rank(const RpnScores& out, const AnchorGrid& grid, double window_weight,
                                      int count);

// BEV Siamese backbone with the correlation RPN heads.
template <typename T>
class RpnNet {
 public:
  struct Output {
    net::Var<T> cls;  // 5 x 17 x 17, sigmoid
    net::Var<T> reg;  // 10 x 17 x 17
  };

  RpnNet(const RpnConfig& cfg, net::ParamStore<T>& store, Rng& rng);

  const RpnConfig& config() const { return cfg_; }
  int feature_depth() const { return cfg_.widths[4]; }

  // 127 px -> D x 6 x 6, 255 px -> D x 22 x 22. Throws ShapeError otherwise.
  net::Var<T> embed(const net::Var<T>& image) const;
  net::Var<T> embed(const BevImage& image) const;

  Output forward(const net::Var<T>& model_fm, const net::Var<T>& search_fm) const;

  static RpnScores scores(const Output& out);

 private:
  struct ConvParams {
    net::Var<T> w;
    net::Var<T> b;
  };
  ConvParams conv(net::ParamStore<T>& store, const std::string& name, int out, int in, int k, Rng& rng);

  RpnConfig cfg_;
  std::array<ConvParams, 5> backbone_;
  ConvParams cls_model_, cls_search_, reg_model_, reg_search_;
  ConvParams cls_head_, reg_head_;
};

template <typename T>
net::Var<T> bev_to_tensor(const BevImage& image);

}  // namespace bevtrack
