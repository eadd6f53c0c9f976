#include "bevtrack/net/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "bevtrack/errors.h"

namespace bevtrack::net {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// Plain loops instead of Eigen reductions, whose summation order follows the
// buffer's alignment and so varies between runs.
template <typename T>
T dot_fixed(const T* a, const T* b, std::size_t n) {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// out[r] += sum over columns of the row-major rows x cols block.
template <typename T>
void add_row_sums(const T* m, int rows, int cols, T* out) {
  for (int r = 0; r < rows; ++r) {
    T s = T(0);
    const T* row = m + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) s += row[c];
    out[r] += s;
  }
}

// out[c] += sum over rows of the row-major rows x cols block.
template <typename T>
void add_col_sums(const T* m, int rows, int cols, T* out) {
  for (int r = 0; r < rows; ++r) {
    const T* row = m + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) out[c] += row[c];
  }
}

struct ConvGeom {
  int c, h, w, o, k, stride, pad, ho, wo;
};

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  const int hw = g.ho * g.wo;
  for (int c = 0; c < g.c; ++c) {
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        T* row = col + static_cast<std::size_t>((c * g.k + ki) * g.k + kj) * hw;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeom& g, T* dx) {
  const int hw = g.ho * g.wo;
  for (int c = 0; c < g.c; ++c) {
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        const T* row = col + static_cast<std::size_t>((c * g.k + ki) * g.k + kj) * hw;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          T* dst = dx + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          const T* src = row + oy * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
  const auto& xs = x->shape();
  const auto& ws = w->shape();
  require(xs.size() == 3, "conv2d: input must be CxHxW, got " + shape_str(xs));
  require(ws.size() == 4 && ws[2] == ws[3], "conv2d: kernel must be OxCxkxk, got " + shape_str(ws));
  require(ws[1] == xs[0], "conv2d: channel mismatch " + shape_str(xs) + " vs " + shape_str(ws));
  require(b->shape().size() == 1 && b->shape()[0] == ws[0], "conv2d: bias must have O entries");
  require(stride >= 1 && pad >= 0, "conv2d: invalid stride/padding");
  ConvGeom g{xs[0], xs[1], xs[2], ws[0], ws[2], stride, pad, 0, 0};
  require(g.h + 2 * pad >= g.k && g.w + 2 * pad >= g.k, "conv2d: kernel larger than padded input");
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  const int ckk = g.c * g.k * g.k;
  const int hw = g.ho * g.wo;

  auto col = std::make_shared<std::vector<T>>(static_cast<std::size_t>(ckk) * hw);
  im2col(x->value.data.data(), g, col->data());

  Tensor<T> out({g.o, g.ho, g.wo});
  MapR<T> om(out.data.data(), g.o, hw);
  CMapR<T> wm(w->value.data.data(), g.o, ckk);
  CMapR<T> cm(col->data(), ckk, hw);
  om.noalias() = wm * cm;
  CVecMap<T> bv(b->value.data.data(), g.o);
  om.colwise() += bv;

  const bool needs = x->requires_grad || w->requires_grad || b->requires_grad;
  if (!needs) col.reset();
  return make_node<T>(std::move(out), {x, w, b}, [x, w, b, g, col, ckk, hw](Node<T>& self) {
    CMapR<T> dout(self.grad.data(), g.o, hw);
    if (w->requires_grad) {
      MapR<T> dw(w->grad.data(), g.o, ckk);
      CMapR<T> cm2(col->data(), ckk, hw);
      dw.noalias() += dout * cm2.transpose();
    }
    if (b->requires_grad) {
      add_row_sums(self.grad.data(), g.o, hw, b->grad.data());
    }
    if (x->requires_grad) {
      CMapR<T> wm2(w->value.data.data(), g.o, ckk);
      MatR<T> dcol = wm2.transpose() * dout;
      col2im(dcol.data(), g, x->grad.data());
    }
  });
}

template <typename T>
Var<T> max_pool2d(const Var<T>& x, int kernel, int stride) {
  const auto& xs = x->shape();
  require(xs.size() == 3, "max_pool2d: input must be CxHxW");
  require(xs[1] >= kernel && xs[2] >= kernel, "max_pool2d: kernel larger than input");
  const int c = xs[0], h = xs[1], w = xs[2];
  const int ho = (h - kernel) / stride + 1;
  const int wo = (w - kernel) / stride + 1;
  Tensor<T> out({c, ho, wo});
  auto arg = std::make_shared<std::vector<int>>(out.numel());
  const T* xv = x->value.data.data();
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        int best = -1;
        T bv = -std::numeric_limits<T>::infinity();
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            const int idx = (ch * h + oy * stride + ky) * w + ox * stride + kx;
            if (xv[idx] > bv) {
              bv = xv[idx];
              best = idx;
            }
          }
        }
        const int o = (ch * ho + oy) * wo + ox;
        out.data[o] = bv;
        (*arg)[o] = best;
      }
    }
  }
  return make_node<T>(std::move(out), {x}, [x, arg](Node<T>& self) {
    for (std::size_t i = 0; i < arg->size(); ++i) x->grad[(*arg)[i]] += self.grad[i];
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x->shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::max(T(0), x->value.data[i]);
  return make_node<T>(std::move(out), {x}, [x](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (x->value.data[i] > T(0)) x->grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out(x->shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.data[i] = T(1) / (T(1) + std::exp(-x->value.data[i]));
  }
  return make_node<T>(std::move(out), {x}, [x](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T s = self.value.data[i];
      x->grad[i] += self.grad[i] * s * (T(1) - s);
    }
  });
}

template <typename T>
Var<T> cross_correlate(const Var<T>& templ, const Var<T>& search) {
  const auto& ts = templ->shape();
  const auto& ss = search->shape();
  require(ts.size() == 3 && ss.size() == 3, "cross_correlate: inputs must be DxHxW");
  require(ts[0] == ss[0], "cross_correlate: depth mismatch " + shape_str(ts) + " vs " + shape_str(ss));
  require(ts[1] <= ss[1] && ts[2] <= ss[2], "cross_correlate: template larger than search");
  const int d = ts[0], th = ts[1], tw = ts[2], sh = ss[1], sw = ss[2];
  const int oh = sh - th + 1, ow = sw - tw + 1;
  Tensor<T> out({d, oh, ow});
  const T* tv = templ->value.data.data();
  const T* sv = search->value.data.data();
  for (int ch = 0; ch < d; ++ch) {
    const T* t = tv + static_cast<std::size_t>(ch) * th * tw;
    const T* s = sv + static_cast<std::size_t>(ch) * sh * sw;
    T* o = out.data.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int u = 0; u < th; ++u) {
      for (int v = 0; v < tw; ++v) {
        const T tk = t[u * tw + v];
        for (int y = 0; y < oh; ++y) {
          const T* srow = s + (y + u) * sw + v;
          T* orow = o + y * ow;
          for (int x = 0; x < ow; ++x) orow[x] += tk * srow[x];
        }
      }
    }
  }
  return make_node<T>(std::move(out), {templ, search},
                      [templ, search, d, th, tw, sh, sw, oh, ow](Node<T>& self) {
    for (int ch = 0; ch < d; ++ch) {
      const T* g = self.grad.data() + static_cast<std::size_t>(ch) * oh * ow;
      const T* t = templ->value.data.data() + static_cast<std::size_t>(ch) * th * tw;
      const T* s = search->value.data.data() + static_cast<std::size_t>(ch) * sh * sw;
      for (int u = 0; u < th; ++u) {
        for (int v = 0; v < tw; ++v) {
          T acc = T(0);
          const T tk = t[u * tw + v];
          for (int y = 0; y < oh; ++y) {
            const T* srow = s + (y + u) * sw + v;
            const T* grow = g + y * ow;
            for (int x = 0; x < ow; ++x) acc += grow[x] * srow[x];
            if (search->requires_grad) {
              T* dsrow = search->grad.data() + static_cast<std::size_t>(ch) * sh * sw + (y + u) * sw + v;
              for (int x = 0; x < ow; ++x) dsrow[x] += grow[x] * tk;
            }
          }
          if (templ->requires_grad) {
            templ->grad[static_cast<std::size_t>(ch) * th * tw + u * tw + v] += acc;
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& xs = x->shape();
  const auto& ws = w->shape();
  require(xs.size() == 2 && ws.size() == 2, "linear: x must be n x in and w out x in");
  require(xs[1] == ws[1], "linear: width mismatch " + shape_str(xs) + " vs " + shape_str(ws));
  require(b->shape().size() == 1 && b->shape()[0] == ws[0], "linear: bias must have out entries");
  const int n = xs[0], in = xs[1], outw = ws[0];
  Tensor<T> out({n, outw});
  MapR<T> om(out.data.data(), n, outw);
  CMapR<T> xm(x->value.data.data(), n, in);
  CMapR<T> wm(w->value.data.data(), outw, in);
  om.noalias() = xm * wm.transpose();
  om.rowwise() += CVecMap<T>(b->value.data.data(), outw).transpose();
  return make_node<T>(std::move(out), {x, w, b}, [x, w, b, n, in, outw](Node<T>& self) {
    CMapR<T> dy(self.grad.data(), n, outw);
    if (x->requires_grad) {
      MapR<T> dx(x->grad.data(), n, in);
      dx.noalias() += dy * CMapR<T>(w->value.data.data(), outw, in);
    }
    if (w->requires_grad) {
      MapR<T> dw(w->grad.data(), outw, in);
      dw.noalias() += dy.transpose() * CMapR<T>(x->value.data.data(), n, in);
    }
    if (b->requires_grad) {
      add_col_sums(self.grad.data(), n, outw, b->grad.data());
    }
  });
}

template <typename T>
Var<T> max_rows(const Var<T>& x) {
  const auto& xs = x->shape();
  require(xs.size() == 2, "max_rows: input must be n x c");
  require(xs[0] >= 1, "max_rows: need at least one row");
  const int n = xs[0], c = xs[1];
  Tensor<T> out({c});
  auto arg = std::make_shared<std::vector<int>>(c, 0);
  const T* xv = x->value.data.data();
  for (int j = 0; j < c; ++j) out.data[j] = xv[j];
  for (int i = 1; i < n; ++i) {
    const T* row = xv + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) {
      if (row[j] > out.data[j]) {
        out.data[j] = row[j];
        (*arg)[j] = i;
      }
    }
  }
  return make_node<T>(std::move(out), {x}, [x, arg, c](Node<T>& self) {
    for (int j = 0; j < c; ++j) x->grad[static_cast<std::size_t>((*arg)[j]) * c + j] += self.grad[j];
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, std::vector<int> shape) {
  require(shape_numel(shape) == x->value.numel(),
          "reshape: " + shape_str(x->shape()) + " -> " + shape_str(shape));
  Tensor<T> out(std::move(shape), x->value.data);
  return make_node<T>(std::move(out), {x}, [x](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
  });
}

template <typename T>
Var<T> gather(const Var<T>& x, std::span<const int> indices) {
  Tensor<T> out({static_cast<int>(indices.size())});
  auto idx = std::make_shared<std::vector<int>>(indices.begin(), indices.end());
  for (std::size_t i = 0; i < idx->size(); ++i) {
    const int k = (*idx)[i];
    if (k < 0 || static_cast<std::size_t>(k) >= x->value.numel()) throw ShapeError("gather: index out of range");
    out.data[i] = x->value.data[k];
  }
  return make_node<T>(std::move(out), {x}, [x, idx](Node<T>& self) {
    for (std::size_t i = 0; i < idx->size(); ++i) x->grad[(*idx)[i]] += self.grad[i];
  });
}

template <typename T>
Var<T> concat(std::span<const Var<T>> xs) {
  std::size_t total = 0;
  for (const auto& x : xs) total += x->value.numel();
  Tensor<T> out({static_cast<int>(total)});
  std::size_t off = 0;
  for (const auto& x : xs) {
    std::copy(x->value.data.begin(), x->value.data.end(), out.data.begin() + off);
    off += x->value.numel();
  }
  std::vector<Var<T>> parents(xs.begin(), xs.end());
  return make_node<T>(std::move(out), parents, [parents](Node<T>& self) {
    std::size_t o = 0;
    for (const auto& p : parents) {
      const std::size_t n = p->value.numel();
      if (p->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) p->grad[i] += self.grad[o + i];
      }
      o += n;
    }
  });
}

template <typename T>
Var<T> cosine_similarity(const Var<T>& u, const Var<T>& v) {
  require(u->value.numel() == v->value.numel(), "cosine_similarity: length mismatch");
  const std::size_t n = u->value.numel();
  const T* up = u->value.data.data();
  const T* vp = v->value.data.data();
  const T nu = std::sqrt(dot_fixed(up, up, n));
  const T nv = std::sqrt(dot_fixed(vp, vp, n));
  if (!(nu > T(0)) || !(nv > T(0))) throw InvalidArgument("cosine_similarity: zero-norm vector");
  const T c = dot_fixed(up, vp, n) / (nu * nv);
  Tensor<T> out({1}, c);
  return make_node<T>(std::move(out), {u, v}, [u, v, nu, nv, c, n](Node<T>& self) {
    const T g = self.grad[0];
    CVecMap<T> um2(u->value.data.data(), n);
    CVecMap<T> vm2(v->value.data.data(), n);
    if (u->requires_grad) {
      VecMap<T>(u->grad.data(), n) += g * (vm2 / (nu * nv) - c * um2 / (nu * nu));
    }
    if (v->requires_grad) {
      VecMap<T>(v->grad.data(), n) += g * (um2 / (nu * nv) - c * vm2 / (nv * nv));
    }
  });
}

template <typename T>
T smooth_l1(T diff) {
  const T a = std::abs(diff);
  return a < T(1) ? T(0.5) * diff * diff : a - T(0.5);
}

namespace {
template <typename T>
constexpr T kProbEps = T(1e-7);
}

template <typename T>
T bce(T p, T target) {
  const T q = std::clamp(p, kProbEps<T>, T(1) - kProbEps<T>);
  return -(target * std::log(q) + (T(1) - target) * std::log(T(1) - q));
}

template <typename T>
Var<T> bce_sum(const Var<T>& p, std::span<const T> target) {
  require(p->value.numel() == target.size(), "bce_sum: size mismatch");
  auto t = std::make_shared<std::vector<T>>(target.begin(), target.end());
  T total = T(0);
  for (std::size_t i = 0; i < t->size(); ++i) total += bce(p->value.data[i], (*t)[i]);
  Tensor<T> out({1}, total);
  return make_node<T>(std::move(out), {p}, [p, t](Node<T>& self) {
    const T g = self.grad[0];
    for (std::size_t i = 0; i < t->size(); ++i) {
      const T pv = p->value.data[i];
      if (pv < kProbEps<T> || pv > T(1) - kProbEps<T>) continue;
      const T y = (*t)[i];
      p->grad[i] += g * (-y / pv + (T(1) - y) / (T(1) - pv));
    }
  });
}

template <typename T>
Var<T> smooth_l1_sum(const Var<T>& x, std::span<const T> target) {
  require(x->value.numel() == target.size(), "smooth_l1_sum: size mismatch");
  auto t = std::make_shared<std::vector<T>>(target.begin(), target.end());
  T total = T(0);
  for (std::size_t i = 0; i < t->size(); ++i) total += smooth_l1(x->value.data[i] - (*t)[i]);
  Tensor<T> out({1}, total);
  return make_node<T>(std::move(out), {x}, [x, t](Node<T>& self) {
    const T g = self.grad[0];
    for (std::size_t i = 0; i < t->size(); ++i) {
      const T d = x->value.data[i] - (*t)[i];
      const T dd = std::abs(d) < T(1) ? d : (d > T(0) ? T(1) : T(-1));
      x->grad[i] += g * dd;
    }
  });
}

template <typename T>
Var<T> squared_error_sum(const Var<T>& x, std::span<const T> target) {
  require(x->value.numel() == target.size(), "squared_error_sum: size mismatch");
  auto t = std::make_shared<std::vector<T>>(target.begin(), target.end());
  T total = T(0);
  for (std::size_t i = 0; i < t->size(); ++i) {
    const T d = x->value.data[i] - (*t)[i];
    total += d * d;
  }
  Tensor<T> out({1}, total);
  return make_node<T>(std::move(out), {x}, [x, t](Node<T>& self) {
    const T g = self.grad[0];
    for (std::size_t i = 0; i < t->size(); ++i) x->grad[i] += g * T(2) * (x->value.data[i] - (*t)[i]);
  });
}

template <typename T>
Var<T> chamfer_to(const Var<T>& pred, std::span<const T> target_xyz) {
  const auto& ps = pred->shape();
  require(ps.size() == 2 && ps[1] == 3, "chamfer_to: prediction must be m x 3");
  require(target_xyz.size() % 3 == 0, "chamfer_to: target must hold xyz triples");
  const int m = ps[0];
  const int n = static_cast<int>(target_xyz.size() / 3);
  if (m == 0 || n == 0) throw InvalidArgument("chamfer_to: empty point cloud");
  const T* pv = pred->value.data.data();
  const T* tv = target_xyz.data();

  auto pred_nn = std::make_shared<std::vector<int>>(m, 0);
  auto targ_nn = std::make_shared<std::vector<int>>(n, 0);
  std::vector<T> targ_best(n, std::numeric_limits<T>::infinity());
  T total = T(0);
  for (int i = 0; i < m; ++i) {
    const T px = pv[3 * i], py = pv[3 * i + 1], pz = pv[3 * i + 2];
    T best = std::numeric_limits<T>::infinity();
    int bj = 0;
    for (int j = 0; j < n; ++j) {
      const T dx = px - tv[3 * j], dy = py - tv[3 * j + 1], dz = pz - tv[3 * j + 2];
      const T d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best) {
        best = d2;
        bj = j;
      }
      if (d2 < targ_best[j]) {
        targ_best[j] = d2;
        (*targ_nn)[j] = i;
      }
    }
    (*pred_nn)[i] = bj;
    total += best;
  }
  for (int j = 0; j < n; ++j) total += targ_best[j];

  auto targ = std::make_shared<std::vector<T>>(target_xyz.begin(), target_xyz.end());
  Tensor<T> out({1}, total);
  return make_node<T>(std::move(out), {pred}, [pred, targ, pred_nn, targ_nn, m, n](Node<T>& self) {
    const T g = self.grad[0];
    const T* p = pred->value.data.data();
    const T* t = targ->data();
    T* dp = pred->grad.data();
    for (int i = 0; i < m; ++i) {
      const int j = (*pred_nn)[i];
      for (int a = 0; a < 3; ++a) dp[3 * i + a] += g * T(2) * (p[3 * i + a] - t[3 * j + a]);
    }
    for (int j = 0; j < n; ++j) {
      const int i = (*targ_nn)[j];
      for (int a = 0; a < 3; ++a) dp[3 * i + a] += g * T(2) * (p[3 * i + a] - t[3 * j + a]);
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out(x->shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = factor * x->value.data[i];
  return make_node<T>(std::move(out), {x}, [x, factor](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += factor * self.grad[i];
  });
}

template <typename T>
Var<T> add(std::span<const Var<T>> xs) {
  require(!xs.empty(), "add: no operands");
  Tensor<T> out(xs[0]->shape());
  for (const auto& x : xs) {
    require(x->value.numel() == out.numel(), "add: size mismatch");
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += x->value.data[i];
  }
  std::vector<Var<T>> parents(xs.begin(), xs.end());
  return make_node<T>(std::move(out), parents, [parents](Node<T>& self) {
    for (const auto& p : parents) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

#define BEVTRACK_INSTANTIATE(T)                                                         \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);     \
  template Var<T> max_pool2d<T>(const Var<T>&, int, int);                               \
  template Var<T> relu<T>(const Var<T>&);                                               \
  template Var<T> sigmoid<T>(const Var<T>&);                                            \
  template Var<T> cross_correlate<T>(const Var<T>&, const Var<T>&);                     \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);               \
  template Var<T> max_rows<T>(const Var<T>&);                                           \
  template Var<T> reshape<T>(const Var<T>&, std::vector<int>);                          \
  template Var<T> gather<T>(const Var<T>&, std::span<const int>);                       \
  template Var<T> concat<T>(std::span<const Var<T>>);                                   \
  template Var<T> cosine_similarity<T>(const Var<T>&, const Var<T>&);                   \
  template Var<T> bce_sum<T>(const Var<T>&, std::span<const T>);                        \
  template Var<T> smooth_l1_sum<T>(const Var<T>&, std::span<const T>);                  \
  template Var<T> squared_error_sum<T>(const Var<T>&, std::span<const T>);              \
  template Var<T> chamfer_to<T>(const Var<T>&, std::span<const T>);                     \
  template Var<T> scale<T>(const Var<T>&, T);                                           \
  template Var<T> add<T>(std::span<const Var<T>>);                                      \
  template T smooth_l1<T>(T);                                                           \
  template T bce<T>(T, T);

BEVTRACK_INSTANTIATE(float)
BEVTRACK_INSTANTIATE(double)

#undef BEVTRACK_INSTANTIATE

}  // namespace bevtrack::net
