#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "audet/numerics/rng.hpp"
#include "audet/numerics/tensor.hpp"

namespace audet::test {

template <std::floating_point T = double>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<T> data(numel(shape));
  for (T& v : data) v = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>(std::move(shape), std::move(data));
}

inline Tensor<double> vec(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor<double>({n}, std::move(values));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("audet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace audet::test
