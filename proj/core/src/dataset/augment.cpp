#include "audet/dataset/augment.hpp"

#include <algorithm>

namespace audet {

AugmentParams draw_augment(Rng& rng) {
  AugmentParams p;
  p.flip = rng.bernoulli(0.5);
  for (std::size_t c = 0; c < 3; ++c) {
    p.scale[c] = static_cast<float>(rng.uniform(0.8, 1.2));
    p.shift[c] = static_cast<float>(rng.uniform(-0.1, 0.1));
  }
  return p;
}

Tensor<float> hflip(const Tensor<float>& image) {
  if (image.rank() != 3) throw ShapeError("hflip: expected (channels, height, width), got " + to_string(image.shape()));
  const std::size_t rows = image.dim(0) * image.dim(1), w = image.dim(2);
  std::vector<float> out(image.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t x = 0; x < w; ++x) out[r * w + x] = image[r * w + (w - 1 - x)];
  return Tensor<float>(image.shape(), std::move(out));
}

Tensor<float> apply_augment(const Tensor<float>& image, const AugmentParams& params) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("augment: expected (3, height, width), got " + to_string(image.shape()));
  }
  const Tensor<float> src = params.flip ? hflip(image) : image;
  const std::size_t plane = image.dim(1) * image.dim(2);
  std::vector<float> out(src.size());
  for (std::size_t c = 0; c < 3; ++c) {
    const float s = params.scale[c], t = params.shift[c];
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] = std::clamp(s * src[c * plane + i] + t, 0.0f, 1.0f);
    }
  }
  return Tensor<float>(image.shape(), std::move(out));
}

}  // namespace audet
