#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "audet/numerics/rng.hpp"
#include "audet/numerics/tensor.hpp"

namespace audet {

/// Weak augmentations only. Label-mixing schemes are deliberately absent:
/// they produce soft targets that the multi-label losses cannot consume.
inline constexpr std::array<std::string_view, 2> kAugmentations = {"hflip", "color-jitter"};

struct AugmentParams {
  bool flip = false;
  std::array<float, 3> scale{1.0f, 1.0f, 1.0f};  ///< per channel, in [0.8, 1.2]
  std::array<float, 3> shift{0.0f, 0.0f, 0.0f};  ///< per channel, in [-0.1, 0.1]
};

/// Flip with probability 0.5, then per-channel jitter draws.
AugmentParams draw_augment(Rng& rng);

/// Mirrors every plane left to right.
Tensor<float> hflip(const Tensor<float>& image);

/// Optional flip, then v -> clamp(scale_c * v + shift_c, 0, 1) per channel.
/// Labels are unaffected: all detected AUs are bilaterally symmetric.
Tensor<float> apply_augment(const Tensor<float>& image, const AugmentParams& params);

inline Tensor<float> augment(const Tensor<float>& image, Rng& rng) {
  return apply_augment(image, draw_augment(rng));
}

}  // namespace audet
