#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "audet/numerics/tensor.hpp"

namespace audet {

// AUT1 layout: magic "AUT1", then little-endian u32 channels, height and
// width, then channels*height*width little-endian f32 values (channel-major
// planes, row-major within a plane) in [0, 1].

std::vector<std::uint8_t> encode_raster(const Tensor<float>& image);

/// Throws FormatError on a bad magic, zero extents, truncated or oversized
/// payloads, and values outside [0, 1].
Tensor<float> decode_raster(std::span<const std::uint8_t> bytes);

void save_raster(const std::string& path, const Tensor<float>& image);

Tensor<float> load_raster(const std::string& path);

}  // namespace audet
