#pragma once

#include <cmath>
#include <span>
#include <string>

#include "audet/numerics/tape.hpp"

namespace audet {

/// Plain stochastic gradient descent: value -= lr * grad, then grads are
/// zeroed. The whole step is rejected, leaving every parameter untouched,
/// if any gradient is non-finite.
template <std::floating_point T>
void sgd_step(std::span<Parameter<T>* const> params, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw UsageError("sgd_step: learning rate must be positive, got " + std::to_string(lr));
  }
  for (const Parameter<T>* p : params) {
    for (T g : p->grad) {
      if (!std::isfinite(g)) throw NumericError("sgd_step: non-finite gradient in " + p->name);
    }
  }
  const T step = static_cast<T>(lr);
  for (Parameter<T>* p : params) {
    std::vector<T> next(p->value.data().begin(), p->value.data().end());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= step * p->grad[i];
    p->value = Tensor<T>(p->value.shape(), std::move(next));
    p->zero_grad();
  }
}

/// Euclidean norm of a parameter's value; used in training diagnostics.
template <std::floating_point T>
double l2_norm(std::span<const T> values) {
  double acc = 0;
  for (T v : values) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

}  // namespace audet
