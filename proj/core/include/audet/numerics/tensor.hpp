#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "audet/errors.hpp"

namespace audet {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <std::floating_point T>
class Tape;

/// Immutable row-major tensor. Copies share the payload. A tensor produced
/// while a Tape is recording carries the tape pointer and its node index.
template <std::floating_point T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : Tensor(Shape{1}, std::vector<T>{T(0)}) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)) {
    if (shape_.empty()) throw ShapeError("tensor: empty shape");
    for (std::size_t extent : shape_) {
      if (extent == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape_));
    }
    if (numel(shape_) != data.size()) {
      throw ShapeError("tensor: shape " + to_string(shape_) + " does not match payload of " +
                       std::to_string(data.size()) + " values");
    }
    data_ = std::make_shared<const std::vector<T>>(std::move(data));
  }

  static Tensor zeros(Shape shape) { return full(std::move(shape), T(0)); }

  static Tensor full(Shape shape, T value) {
    const std::size_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value));
  }

  static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_->size(); }

  std::span<const T> data() const { return {data_->data(), data_->size()}; }
  const std::vector<T>& vec() const& { return *data_; }
  std::vector<T> vec() const&& { return *data_; }
  T operator[](std::size_t i) const { return (*data_)[i]; }

  T item() const {
    if (size() != 1) throw ShapeError("tensor: item() on shape " + to_string(shape_));
    return (*data_)[0];
  }

  bool tracked() const { return tape_ != nullptr; }
  Tape<T>* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  /// Same payload, no tape association.
  Tensor detach() const {
    Tensor out = *this;
    out.tape_ = nullptr;
    out.node_ = 0;
    return out;
  }

  /// Converts the payload to another precision.
  template <std::floating_point U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_->begin(), data_->end()));
  }

  bool all_finite() const {
    for (T v : *data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  friend class Tape<T>;

  Shape shape_;
  std::shared_ptr<const std::vector<T>> data_;
  Tape<T>* tape_ = nullptr;
  std::size_t node_ = 0;
};

/// Exact payload and shape equality, ignoring tape association.
template <std::floating_point T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.vec().data(), b.vec().data(), a.size() * sizeof(T)) == 0;
}

}  // namespace audet
