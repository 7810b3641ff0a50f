#include "audet/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "audet/numerics/primitive.hpp"

namespace audet::ops {

using detail::make_output;
using detail::shape_mismatch;
using detail::tape_of;

namespace {

template <std::floating_point T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// Broadcast layout for the binary element-wise ops: `b` repeats `repeat`
// times along the leading axis of `a`.
struct Broadcast {
  std::size_t repeat = 1;
  std::size_t inner = 0;
};

template <std::floating_point T>
Broadcast broadcast_layout(std::string_view op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() == b.shape()) return {1, a.size()};
  if (b.rank() == a.rank() && b.dim(0) == 1 &&
      std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    return {a.dim(0), b.size()};
  }
  shape_mismatch(op, a.shape(), b.shape());
}

// Sums a gradient laid out like `a` down to the shape of `b`.
template <std::floating_point T>
void reduce_into(std::span<T> gb, std::span<const T> g, const Broadcast& bc) {
  for (std::size_t r = 0; r < bc.repeat; ++r) {
    const T* src = g.data() + r * bc.inner;
    for (std::size_t i = 0; i < bc.inner; ++i) gb[i] += src[i];
  }
}

template <std::floating_point T>
void require_rank(std::string_view op, const Tensor<T>& x, std::size_t rank,
                  std::string_view what) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected " + std::string(what) + " of rank " +
                     std::to_string(rank) + ", got " + to_string(x.shape()));
  }
}

}  // namespace

template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  constexpr std::string_view op = "linear";
  require_rank(op, weight, 2, "weight");
  require_rank(op, bias, 1, "bias");
  if (x.rank() != 1 && x.rank() != 2) shape_mismatch(op, x.shape(), weight.shape());
  const std::size_t out = weight.dim(0), in = weight.dim(1);
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  if (x.shape().back() != in) shape_mismatch(op, x.shape(), weight.shape());
  if (bias.dim(0) != out) shape_mismatch(op, weight.shape(), bias.shape());

  const T* xv = x.data().data();
  const T* w = weight.data().data();
  const T* b = bias.data().data();
  std::vector<T> y(rows * out);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      T acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * xv[r * in + i];
      y[r * out + o] = acc;
    }
  }
  Shape shape = x.rank() == 1 ? Shape{out} : Shape{rows, out};
  Tensor<T> result = make_output(op, std::move(shape), std::move(y));
  Tape<T>* tape = tape_of(op, {&x, &weight, &bias});
  if (!tape) return result;
  return tape->record(std::string(op), result,
                      [x, weight, bias, rows, in, out](std::span<const T> g, Tape<T>& t) {
                        const T* xv = x.data().data();
                        const T* w = weight.data().data();
                        if (x.tracked()) {
                          auto gx = t.grad_slot(x.node());
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t o = 0; o < out; ++o) {
                              const T go = g[r * out + o];
                              for (std::size_t i = 0; i < in; ++i) gx[r * in + i] += go * w[o * in + i];
                            }
                        }
                        if (weight.tracked()) {
                          auto gw = t.grad_slot(weight.node());
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t o = 0; o < out; ++o) {
                              const T go = g[r * out + o];
                              for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += go * xv[r * in + i];
                            }
                        }
                        if (bias.tracked()) {
                          auto gb = t.grad_slot(bias.node());
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t o = 0; o < out; ++o) gb[o] += g[r * out + o];
                        }
                      });
}

template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight) {
  require_rank("linear", weight, 2, "weight");
  // A zero bias that is never tracked contributes nothing to the gradient.
  return linear(x, weight, Tensor<T>::zeros({weight.dim(0)}));
}

template <std::floating_point T>
Tensor<T> conv1x1(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  constexpr std::string_view op = "conv1x1";
  require_rank(op, x, 3, "input");
  require_rank(op, weight, 2, "weight");
  require_rank(op, bias, 1, "bias");
  const std::size_t in = x.dim(0), pixels = x.dim(1) * x.dim(2);
  const std::size_t out = weight.dim(0);
  if (weight.dim(1) != in) shape_mismatch(op, x.shape(), weight.shape());
  if (bias.dim(0) != out) shape_mismatch(op, weight.shape(), bias.shape());

  const T* xv = x.data().data();
  const T* w = weight.data().data();
  std::vector<T> y(out * pixels);
  for (std::size_t o = 0; o < out; ++o) {
    T* yo = y.data() + o * pixels;
    std::fill(yo, yo + pixels, bias[o]);
    for (std::size_t c = 0; c < in; ++c) {
      const T wc = w[o * in + c];
      const T* xc = xv + c * pixels;
      for (std::size_t p = 0; p < pixels; ++p) yo[p] += wc * xc[p];
    }
  }
  Tensor<T> result = make_output(op, {out, x.dim(1), x.dim(2)}, std::move(y));
  Tape<T>* tape = tape_of(op, {&x, &weight, &bias});
  if (!tape) return result;
  return tape->record(std::string(op), result,
                      [x, weight, bias, in, out, pixels](std::span<const T> g, Tape<T>& t) {
                        const T* xv = x.data().data();
                        const T* w = weight.data().data();
                        if (x.tracked()) {
                          auto gx = t.grad_slot(x.node());
                          for (std::size_t o = 0; o < out; ++o)
                            for (std::size_t c = 0; c < in; ++c) {
                              const T wc = w[o * in + c];
                              for (std::size_t p = 0; p < pixels; ++p)
                                gx[c * pixels + p] += wc * g[o * pixels + p];
                            }
                        }
                        if (weight.tracked()) {
                          auto gw = t.grad_slot(weight.node());
                          for (std::size_t o = 0; o < out; ++o)
                            for (std::size_t c = 0; c < in; ++c) {
                              T acc = 0;
                              for (std::size_t p = 0; p < pixels; ++p)
                                acc += g[o * pixels + p] * xv[c * pixels + p];
                              gw[o * in + c] += acc;
                            }
                        }
                        if (bias.tracked()) {
                          auto gb = t.grad_slot(bias.node());
                          for (std::size_t o = 0; o < out; ++o)
                            for (std::size_t p = 0; p < pixels; ++p) gb[o] += g[o * pixels + p];
                        }
                      });
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel, stride, padding;
  std::size_t out_h, out_w;

  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t pixels() const { return out_h * out_w; }
};

template <std::floating_point T>
std::vector<T> im2col(const T* x, const ConvGeometry& cg) {
  std::vector<T> col(cg.rows() * cg.pixels(), T(0));
  for (std::size_t c = 0; c < cg.channels; ++c)
    for (std::size_t ki = 0; ki < cg.kernel; ++ki)
      for (std::size_t kj = 0; kj < cg.kernel; ++kj) {
        T* dst = col.data() + ((c * cg.kernel + ki) * cg.kernel + kj) * cg.pixels();
        for (std::size_t oy = 0; oy < cg.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * cg.stride + ki) -
                                    static_cast<std::ptrdiff_t>(cg.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(cg.height)) continue;
          const T* src = x + (c * cg.height + static_cast<std::size_t>(iy)) * cg.width;
          for (std::size_t ox = 0; ox < cg.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * cg.stride + kj) -
                                      static_cast<std::ptrdiff_t>(cg.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(cg.width)) continue;
            dst[oy * cg.out_w + ox] = src[ix];
          }
        }
      }
  return col;
}

template <std::floating_point T>
void col2im_add(const std::vector<T>& col, std::span<T> gx, const ConvGeometry& cg) {
  for (std::size_t c = 0; c < cg.channels; ++c)
    for (std::size_t ki = 0; ki < cg.kernel; ++ki)
      for (std::size_t kj = 0; kj < cg.kernel; ++kj) {
        const T* src = col.data() + ((c * cg.kernel + ki) * cg.kernel + kj) * cg.pixels();
        for (std::size_t oy = 0; oy < cg.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * cg.stride + ki) -
                                    static_cast<std::ptrdiff_t>(cg.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(cg.height)) continue;
          T* dst = gx.data() + (c * cg.height + static_cast<std::size_t>(iy)) * cg.width;
          for (std::size_t ox = 0; ox < cg.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * cg.stride + kj) -
                                      static_cast<std::ptrdiff_t>(cg.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(cg.width)) continue;
            dst[ix] += src[oy * cg.out_w + ox];
          }
        }
      }
}

}  // namespace

template <std::floating_point T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  constexpr std::string_view op = "conv2d";
  require_rank(op, x, 3, "input");
  require_rank(op, weight, 4, "weight");
  require_rank(op, bias, 1, "bias");
  if (weight.dim(1) != x.dim(0)) shape_mismatch(op, x.shape(), weight.shape());
  if (weight.dim(2) != weight.dim(3)) throw ShapeError("conv2d: kernel must be square");
  if (bias.dim(0) != weight.dim(0)) shape_mismatch(op, weight.shape(), bias.shape());
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t k = weight.dim(2);
  if (x.dim(1) + 2 * padding < k || x.dim(2) + 2 * padding < k) {
    shape_mismatch(op, x.shape(), weight.shape());
  }
  ConvGeometry cg{x.dim(0), x.dim(1), x.dim(2), k, stride, padding, 0, 0};
  cg.out_h = (cg.height + 2 * padding - k) / stride + 1;
  cg.out_w = (cg.width + 2 * padding - k) / stride + 1;
  const std::size_t out = weight.dim(0), rows = cg.rows(), pixels = cg.pixels();

  const std::vector<T> col = im2col(x.data().data(), cg);
  const T* w = weight.data().data();
  std::vector<T> y(out * pixels);
  for (std::size_t o = 0; o < out; ++o) {
    T* yo = y.data() + o * pixels;
    std::fill(yo, yo + pixels, bias[o]);
    for (std::size_t r = 0; r < rows; ++r) {
      const T wr = w[o * rows + r];
      const T* cr = col.data() + r * pixels;
      for (std::size_t p = 0; p < pixels; ++p) yo[p] += wr * cr[p];
    }
  }
  Tensor<T> result = make_output(op, {out, cg.out_h, cg.out_w}, std::move(y));
  Tape<T>* tape = tape_of(op, {&x, &weight, &bias});
  if (!tape) return result;
  return tape->record(
      std::string(op), result, [x, weight, bias, cg, out](std::span<const T> g, Tape<T>& t) {
        const std::size_t rows = cg.rows(), pixels = cg.pixels();
        const T* w = weight.data().data();
        if (weight.tracked()) {
          const std::vector<T> col = im2col(x.data().data(), cg);
          auto gw = t.grad_slot(weight.node());
          for (std::size_t o = 0; o < out; ++o) {
            const T* go = g.data() + o * pixels;
            for (std::size_t r = 0; r < rows; ++r) {
              const T* cr = col.data() + r * pixels;
              T acc = 0;
              for (std::size_t p = 0; p < pixels; ++p) acc += go[p] * cr[p];
              gw[o * rows + r] += acc;
            }
          }
        }
        if (bias.tracked()) {
          auto gb = t.grad_slot(bias.node());
          for (std::size_t o = 0; o < out; ++o)
            for (std::size_t p = 0; p < pixels; ++p) gb[o] += g[o * pixels + p];
        }
        if (x.tracked()) {
          std::vector<T> gcol(rows * pixels, T(0));
          for (std::size_t o = 0; o < out; ++o) {
            const T* go = g.data() + o * pixels;
            for (std::size_t r = 0; r < rows; ++r) {
              const T wr = w[o * rows + r];
              T* gc = gcol.data() + r * pixels;
              for (std::size_t p = 0; p < pixels; ++p) gc[p] += wr * go[p];
            }
          }
          col2im_add(gcol, t.grad_slot(x.node()), cg);
        }
      });
}

template <std::floating_point T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  Tensor<T> result = make_output("relu", x.shape(), std::move(y));
  Tape<T>* tape = tape_of("relu", {&x});
  if (!tape) return result;
  return tape->record("relu", result, [x](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > T(0)) gx[i] += g[i];
  });
}

template <std::floating_point T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = stable_sigmoid(x[i]);
  Tensor<T> result = make_output("sigmoid", x.shape(), std::move(y));
  Tape<T>* tape = tape_of("sigmoid", {&x});
  if (!tape) return result;
  return tape->record("sigmoid", result, [x, result](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * result[i] * (T(1) - result[i]);
  });
}

template <std::floating_point T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::size_t cols = x.shape().back(), rows = x.size() / cols;
  std::vector<T> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * cols;
    T* yr = y.data() + r * cols;
    const T peak = *std::max_element(xr, xr + cols);
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) total += (yr[c] = std::exp(xr[c] - peak));
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= total;
  }
  Tensor<T> result = make_output("softmax", x.shape(), std::move(y));
  Tape<T>* tape = tape_of("softmax", {&x});
  if (!tape) return result;
  return tape->record("softmax", result, [x, result, rows, cols](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = 0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * result[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c)
        gx[r * cols + c] += result[r * cols + c] * (g[r * cols + c] - dot);
    }
  });
}

template <std::floating_point T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  constexpr std::string_view op = "layer_norm";
  const std::size_t cols = x.shape().back(), rows = x.size() / cols;
  if (gamma.shape() != Shape{cols}) shape_mismatch(op, x.shape(), gamma.shape());
  if (beta.shape() != Shape{cols}) shape_mismatch(op, x.shape(), beta.shape());
  std::vector<T> xhat(x.size()), inv_std(rows), y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * cols;
    T mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += xr[c];
    mu /= T(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= T(cols);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      xhat[r * cols + c] = (xr[c] - mu) * inv_std[r];
      y[r * cols + c] = gamma[c] * xhat[r * cols + c] + beta[c];
    }
  }
  Tensor<T> result = make_output(op, x.shape(), std::move(y));
  Tape<T>* tape = tape_of(op, {&x, &gamma, &beta});
  if (!tape) return result;
  return tape->record(
      std::string(op), result,
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
       cols](std::span<const T> g, Tape<T>& t) {
        if (gamma.tracked()) {
          auto gg = t.grad_slot(gamma.node());
          for (std::size_t i = 0; i < g.size(); ++i) gg[i % cols] += g[i] * xhat[i];
        }
        if (beta.tracked()) {
          auto gb = t.grad_slot(beta.node());
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
        }
        if (x.tracked()) {
          auto gx = t.grad_slot(x.node());
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_g = 0, mean_gx = 0;
            for (std::size_t c = 0; c < cols; ++c) {
              const T gh = g[r * cols + c] * gamma[c];
              mean_g += gh;
              mean_gx += gh * xhat[r * cols + c];
            }
            mean_g /= T(cols);
            mean_gx /= T(cols);
            for (std::size_t c = 0; c < cols; ++c) {
              const T gh = g[r * cols + c] * gamma[c];
              gx[r * cols + c] += inv_std[r] * (gh - mean_g - xhat[r * cols + c] * mean_gx);
            }
          }
        }
      });
}

template <std::floating_point T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank("global_avg_pool", x, 3, "input");
  const std::size_t channels = x.dim(0), pixels = x.dim(1) * x.dim(2);
  std::vector<T> y(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    T acc = 0;
    for (std::size_t p = 0; p < pixels; ++p) acc += x[c * pixels + p];
    y[c] = acc / T(pixels);
  }
  Tensor<T> result = make_output("global_avg_pool", {channels}, std::move(y));
  Tape<T>* tape = tape_of("global_avg_pool", {&x});
  if (!tape) return result;
  return tape->record("global_avg_pool", result,
                      [x, channels, pixels](std::span<const T> g, Tape<T>& t) {
                        auto gx = t.grad_slot(x.node());
                        for (std::size_t c = 0; c < channels; ++c) {
                          const T share = g[c] / T(pixels);
                          for (std::size_t p = 0; p < pixels; ++p) gx[c * pixels + p] += share;
                        }
                      });
}

template <std::floating_point T>
Tensor<T> channel_max(const Tensor<T>& x) {
  require_rank("channel_max", x, 3, "input");
  const std::size_t channels = x.dim(0), pixels = x.dim(1) * x.dim(2);
  std::vector<T> y(pixels);
  std::vector<std::size_t> winner(pixels, 0);
  for (std::size_t p = 0; p < pixels; ++p) {
    y[p] = x[p];
    for (std::size_t c = 1; c < channels; ++c) {
      if (x[c * pixels + p] > y[p]) {
        y[p] = x[c * pixels + p];
        winner[p] = c;
      }
    }
  }
  Tensor<T> result = make_output("channel_max", {1, x.dim(1), x.dim(2)}, std::move(y));
  Tape<T>* tape = tape_of("channel_max", {&x});
  if (!tape) return result;
  return tape->record("channel_max", result,
                      [x, pixels, winner = std::move(winner)](std::span<const T> g, Tape<T>& t) {
                        auto gx = t.grad_slot(x.node());
                        for (std::size_t p = 0; p < pixels; ++p) gx[winner[p] * pixels + p] += g[p];
                      });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

template <std::floating_point T>
Tensor<T> binary(Binary kind, std::string_view op, const Tensor<T>& a, const Tensor<T>& b) {
  const Broadcast bc = broadcast_layout(op, a, b);
  std::vector<T> y(a.size());
  for (std::size_t r = 0; r < bc.repeat; ++r)
    for (std::size_t i = 0; i < bc.inner; ++i) {
      const std::size_t j = r * bc.inner + i;
      switch (kind) {
        case Binary::kAdd: y[j] = a[j] + b[i]; break;
        case Binary::kSub: y[j] = a[j] - b[i]; break;
        case Binary::kMul: y[j] = a[j] * b[i]; break;
      }
    }
  Tensor<T> result = make_output(op, a.shape(), std::move(y));
  Tape<T>* tape = tape_of(op, {&a, &b});
  if (!tape) return result;
  return tape->record(std::string(op), result, [kind, a, b, bc](std::span<const T> g, Tape<T>& t) {
    if (a.tracked()) {
      auto ga = t.grad_slot(a.node());
      for (std::size_t r = 0; r < bc.repeat; ++r)
        for (std::size_t i = 0; i < bc.inner; ++i) {
          const std::size_t j = r * bc.inner + i;
          ga[j] += kind == Binary::kMul ? g[j] * b[i] : g[j];
        }
    }
    if (b.tracked()) {
      auto gb = t.grad_slot(b.node());
      if (kind == Binary::kAdd) {
        reduce_into(gb, g, bc);
      } else {
        for (std::size_t r = 0; r < bc.repeat; ++r)
          for (std::size_t i = 0; i < bc.inner; ++i) {
            const std::size_t j = r * bc.inner + i;
            gb[i] += kind == Binary::kMul ? g[j] * a[j] : -g[j];
          }
      }
    }
  });
}

}  // namespace

template <std::floating_point T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::kAdd, "add", a, b);
}

template <std::floating_point T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::kSub, "sub", a, b);
}

template <std::floating_point T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::kMul, "mul", a, b);
}

template <std::floating_point T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift) {
  std::vector<T> y(x.size());
  // A zero shift is skipped so that the sign of zero products survives.
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = shift == T(0) ? scale * x[i] : scale * x[i] + shift;
  Tensor<T> result = make_output("affine", x.shape(), std::move(y));
  Tape<T>* tape = tape_of("affine", {&x});
  if (!tape) return result;
  return tape->record("affine", result, [x, scale](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += scale * g[i];
  });
}

template <std::floating_point T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  constexpr std::string_view op = "concat";
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t cols = parts.front().shape().back();
  std::size_t rows = 0;
  Tape<T>* tape = nullptr;
  for (const auto& p : parts) {
    if (p.rank() > 2 || p.shape().back() != cols) shape_mismatch(op, parts.front().shape(), p.shape());
    rows += p.rank() == 1 ? 1 : p.dim(0);
    if (Tape<T>* pt = tape_of(op, {&p})) {
      if (tape && tape != pt) throw UsageError("concat: inputs recorded on different tapes");
      tape = pt;
    }
  }
  std::vector<T> y;
  y.reserve(rows * cols);
  for (const auto& p : parts) y.insert(y.end(), p.data().begin(), p.data().end());
  Tensor<T> result = make_output(op, {rows, cols}, std::move(y));
  if (!tape) return result;
  return tape->record(std::string(op), result, [parts](std::span<const T> g, Tape<T>& t) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      if (p.tracked()) {
        auto gp = t.grad_slot(p.node());
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g[offset + i];
      }
      offset += p.size();
    }
  });
}

template <std::floating_point T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) shape_mismatch("reshape", x.shape(), shape);
  Tensor<T> result(std::move(shape), x.vec());
  Tape<T>* tape = tape_of("reshape", {&x});
  if (!tape) return result;
  return tape->record("reshape", result, [x](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <std::floating_point T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  require_rank("slice_rows", x, 2, "input");
  if (count == 0 || begin + count > x.dim(0)) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + to_string(x.shape()));
  }
  const std::size_t cols = x.dim(1);
  std::vector<T> y(x.data().begin() + begin * cols, x.data().begin() + (begin + count) * cols);
  Tensor<T> result = make_output("slice_rows", {count, cols}, std::move(y));
  Tape<T>* tape = tape_of("slice_rows", {&x});
  if (!tape) return result;
  return tape->record("slice_rows", result, [x, begin, cols](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * cols + i] += g[i];
  });
}

template <std::floating_point T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  constexpr std::string_view op = "matmul";
  require_rank(op, a, 2, "left operand");
  require_rank(op, b, 2, "right operand");
  if (a.dim(1) != b.dim(0)) shape_mismatch(op, a.shape(), b.shape());
  const std::size_t m = a.dim(0), n = a.dim(1), p = b.dim(1);
  std::vector<T> y(m * p, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const T aik = a[i * n + k];
      for (std::size_t j = 0; j < p; ++j) y[i * p + j] += aik * b[k * p + j];
    }
  Tensor<T> result = make_output(op, {m, p}, std::move(y));
  Tape<T>* tape = tape_of(op, {&a, &b});
  if (!tape) return result;
  return tape->record(std::string(op), result, [a, b, m, n, p](std::span<const T> g, Tape<T>& t) {
    if (a.tracked()) {
      auto ga = t.grad_slot(a.node());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) {
          T acc = 0;
          for (std::size_t j = 0; j < p; ++j) acc += g[i * p + j] * b[k * p + j];
          ga[i * n + k] += acc;
        }
    }
    if (b.tracked()) {
      auto gb = t.grad_slot(b.node());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) {
          const T aik = a[i * n + k];
          for (std::size_t j = 0; j < p; ++j) gb[k * p + j] += aik * g[i * p + j];
        }
    }
  });
}

template <std::floating_point T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    std::size_t heads, std::vector<T>* weights) {
  constexpr std::string_view op = "attention";
  require_rank(op, q, 2, "queries");
  if (k.shape() != q.shape()) shape_mismatch(op, q.shape(), k.shape());
  if (v.shape() != q.shape()) shape_mismatch(op, q.shape(), v.shape());
  const std::size_t n = q.dim(0), d = q.dim(1);
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: " + std::to_string(heads) + " heads do not divide width " +
                     std::to_string(d));
  }
  const std::size_t dh = d / heads;
  const T scale = T(1) / std::sqrt(T(dh));

  // probs[h][i][j], row-softmax of the scaled scores.
  std::vector<T> probs(heads * n * n);
  std::vector<T> y(n * d, T(0));
  for (std::size_t h = 0; h < heads; ++h) {
    T* ph = probs.data() + h * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      T* row = ph + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        T s = 0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) s += q[i * d + c] * k[j * d + c];
        row[j] = s * scale;
      }
      const T peak = *std::max_element(row, row + n);
      T total = 0;
      for (std::size_t j = 0; j < n; ++j) total += (row[j] = std::exp(row[j] - peak));
      for (std::size_t j = 0; j < n; ++j) row[j] /= total;
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) y[i * d + c] += row[j] * v[j * d + c];
    }
  }
  if (weights) *weights = probs;
  Tensor<T> result = make_output(op, {n, d}, std::move(y));
  Tape<T>* tape = tape_of(op, {&q, &k, &v});
  if (!tape) return result;
  return tape->record(
      std::string(op), result,
      [q, k, v, probs = std::move(probs), heads, n, d, dh, scale](std::span<const T> g,
                                                                  Tape<T>& t) {
        std::vector<T> gq(n * d, T(0)), gk(n * d, T(0)), gv(n * d, T(0));
        std::vector<T> gp(n);
        for (std::size_t h = 0; h < heads; ++h) {
          const T* ph = probs.data() + h * n * n;
          for (std::size_t i = 0; i < n; ++i) {
            const T* row = ph + i * n;
            T dot = 0;
            for (std::size_t j = 0; j < n; ++j) {
              T acc = 0;
              for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                acc += g[i * d + c] * v[j * d + c];
                gv[j * d + c] += row[j] * g[i * d + c];
              }
              gp[j] = acc;
              dot += acc * row[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const T gs = row[j] * (gp[j] - dot) * scale;
              for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                gq[i * d + c] += gs * k[j * d + c];
                gk[j * d + c] += gs * q[i * d + c];
              }
            }
          }
        }
        auto flush = [&t](const Tensor<T>& x, const std::vector<T>& gx) {
          if (!x.tracked()) return;
          auto slot = t.grad_slot(x.node());
          for (std::size_t i = 0; i < gx.size(); ++i) slot[i] += gx[i];
        };
        flush(q, gq);
        flush(k, gk);
        flush(v, gv);
      });
}

template <std::floating_point T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  Tensor<T> result = make_output("sum", {1}, std::vector<T>{acc});
  Tape<T>* tape = tape_of("sum", {&x});
  if (!tape) return result;
  return tape->record("sum", result, [x](std::span<const T> g, Tape<T>& t) {
    auto gx = t.grad_slot(x.node());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
  });
}

template <std::floating_point T>
Tensor<T> mean(const Tensor<T>& x) {
  return affine(sum(x), T(1) / T(x.size()));
}

#define AUDET_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> conv1x1(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, \
                            std::size_t);                                                     \
  template Tensor<T> relu(const Tensor<T>&);                                                  \
  template Tensor<T> sigmoid(const Tensor<T>&);                                               \
  template Tensor<T> softmax(const Tensor<T>&);                                               \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                       \
  template Tensor<T> channel_max(const Tensor<T>&);                                           \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> affine(const Tensor<T>&, T, T);                                          \
  template Tensor<T> concat(const std::vector<Tensor<T>>&);                                   \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                        \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                               std::size_t, std::vector<T>*);                                 \
  template Tensor<T> sum(const Tensor<T>&);                                                   \
  template Tensor<T> mean(const Tensor<T>&);

AUDET_INSTANTIATE_OPS(float)
AUDET_INSTANTIATE_OPS(double)

}  // namespace audet::ops
