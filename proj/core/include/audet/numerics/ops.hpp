#pragma once

#include <cstddef>
#include <vector>

#include "audet/numerics/tape.hpp"
#include "audet/numerics/tensor.hpp"

// Differentiable primitives. Each op checks shapes eagerly, rejects
// non-finite outputs, and records itself on the tape of its tracked inputs.

namespace audet::ops {

/// y = W x + b for x of shape (in) or row-wise for x of shape (n, in).
/// W is (out, in), b is (out).
template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Bias-free variant of linear().
template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight);

/// Per-pixel channel mixing: x (C, h, w), W (O, C), b (O) -> (O, h, w).
template <std::floating_point T>
Tensor<T> conv1x1(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Square-kernel convolution with zero padding: x (C, H, W), W (O, C, k, k).
template <std::floating_point T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);

template <std::floating_point T>
Tensor<T> relu(const Tensor<T>& x);

template <std::floating_point T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// Softmax along the last axis.
template <std::floating_point T>
Tensor<T> softmax(const Tensor<T>& x);

/// Normalizes each row over the last axis, then applies gamma and beta.
template <std::floating_point T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

/// (C, h, w) -> (C), mean over the spatial positions.
template <std::floating_point T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

/// (M, h, w) -> (1, h, w). Backward routes to the argmax; ties go to the
/// lowest channel index.
template <std::floating_point T>
Tensor<T> channel_max(const Tensor<T>& x);

/// Element-wise ops. `b` may either match `a` or have a leading extent of 1
/// with the remaining extents equal, in which case it is broadcast along
/// the leading axis of `a` (e.g. a (1, h, w) map over (C, h, w)).
template <std::floating_point T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// scale * x + shift with constant scalars.
template <std::floating_point T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift = T(0));

/// Concatenation along axis 0. Inputs of rank 1 are treated as single rows.
template <std::floating_point T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts);

template <std::floating_point T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Rows [begin, begin + count) of a rank-2 tensor.
template <std::floating_point T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t count);

/// (m, n) x (n, p) -> (m, p).
template <std::floating_point T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Multi-head scaled dot-product attention over rows: q, k, v are (n, d),
/// heads split the columns into equal blocks. When `weights` is non-null it
/// receives the (heads, n, n) attention weights.
template <std::floating_point T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    std::size_t heads, std::vector<T>* weights = nullptr);

template <std::floating_point T>
Tensor<T> sum(const Tensor<T>& x);

template <std::floating_point T>
Tensor<T> mean(const Tensor<T>& x);

}  // namespace audet::ops
