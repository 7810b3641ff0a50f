#pragma once

#include <cmath>
#include <string>

#include "audet/numerics/rng.hpp"
#include "audet/numerics/tape.hpp"

namespace audet::init {

/// Uniform in [-gain / sqrt(fan_in), gain / sqrt(fan_in)].
template <std::floating_point T>
Parameter<T> fan_in_uniform(std::string name, Shape shape, std::size_t fan_in, Rng& rng,
                            double gain = 1.0) {
  const double bound = gain / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> data(numel(shape));
  for (T& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
  return Parameter<T>(std::move(name), Tensor<T>(std::move(shape), std::move(data)));
}

/// Gain for layers followed by relu (He-uniform bound sqrt(6 / fan_in)).
inline constexpr double kReluGain = 2.449489742783178;

template <std::floating_point T>
Parameter<T> zeros(std::string name, Shape shape) {
  return Parameter<T>(std::move(name), Tensor<T>::zeros(std::move(shape)));
}

template <std::floating_point T>
Parameter<T> ones(std::string name, Shape shape) {
  return Parameter<T>(std::move(name), Tensor<T>::full(std::move(shape), T(1)));
}

template <std::floating_point T>
Parameter<T> normal(std::string name, Shape shape, double stddev, Rng& rng) {
  std::vector<T> data(numel(shape));
  for (T& v : data) v = static_cast<T>(stddev * rng.normal());
  return Parameter<T>(std::move(name), Tensor<T>(std::move(shape), std::move(data)));
}

}  // namespace audet::init
