#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "audet/numerics/tape.hpp"

// Helpers for writing new differentiable primitives outside ops.cpp.

namespace audet::detail {

/// The single tape shared by the tracked inputs, or nullptr.
template <std::floating_point T>
Tape<T>* tape_of(std::string_view op, std::initializer_list<const Tensor<T>*> inputs) {
  Tape<T>* tape = nullptr;
  for (const Tensor<T>* t : inputs) {
    if (!t->tracked()) continue;
    if (tape && tape != t->tape()) {
      throw UsageError(std::string(op) + ": inputs recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

/// Wraps a freshly computed payload, rejecting NaN/Inf.
template <std::floating_point T>
Tensor<T> make_output(std::string_view op, Shape shape, std::vector<T> data) {
  for (T v : data) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite output");
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

[[noreturn]] inline void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

}  // namespace audet::detail
