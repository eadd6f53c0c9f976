#pragma once

#include <span>
#include <vector>

#include "bevtrack/net/tensor.h"

namespace bevtrack::net {

// x: C x H x W, w: O x C x k x k, b: O. Output O x Ho x Wo with
// Ho = floor((H + 2 pad - k) / stride) + 1.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad);

template <typename T>
Var<T> max_pool2d(const Var<T>& x, int kernel, int stride);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> sigmoid(const Var<T>& x);

// Depthwise valid cross-correlation: D x h x w template over D x H x W search.
template <typename T>
Var<T> cross_correlate(const Var<T>& templ, const Var<T>& search);

// Row-wise affine map: x n x in, w out x in, b out -> n x out.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);

// Column-wise maximum over rows: n x c -> c.
template <typename T>
Var<T> max_rows(const Var<T>& x);

template <typename T>
Var<T> reshape(const Var<T>& x, std::vector<int> shape);

// Flat gather of selected entries -> m.
template <typename T>
Var<T> gather(const Var<T>& x, std::span<const int> indices);

// Concatenates flat contents of each input -> sum of sizes.
template <typename T>
Var<T> concat(std::span<const Var<T>> xs);

// Cosine of the angle between two flat vectors (shape 1). Throws InvalidArgument
// when either has zero norm.
template <typename T>
Var<T> cosine_similarity(const Var<T>& u, const Var<T>& v);

// Sum of binary cross-entropies; p is clamped to [1e-7, 1 - 1e-7].
template <typename T>
Var<T> bce_sum(const Var<T>& p, std::span<const T> target);

// Sum of Smooth-L1 terms: 0.5 d^2 if |d| < 1 else |d| - 0.5, d = x - target.
template <typename T>
Var<T> smooth_l1_sum(const Var<T>& x, std::span<const T> target);

// Sum of (x - target)^2.
template <typename T>
Var<T> squared_error_sum(const Var<T>& x, std::span<const T> target);

// Chamfer distance between predicted points (m x 3) and a fixed cloud.
template <typename T>
Var<T> chamfer_to(const Var<T>& pred, std::span<const T> target_xyz);

template <typename T>
Var<T> scale(const Var<T>& x, T factor);

// Sum of equally-shaped tensors.
template <typename T>
Var<T> add(std::span<const Var<T>> xs);

// Scalar helpers on plain values; shared by the differentiable ops and tests.
template <typename T>
T smooth_l1(T diff);

template <typename T>
T bce(T p, T target);

}  // namespace bevtrack::net
