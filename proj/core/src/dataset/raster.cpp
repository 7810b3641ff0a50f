#include "audet/dataset/raster.hpp"

#include "audet/io/binary.hpp"

namespace audet {

namespace {
constexpr std::string_view kMagic = "AUT1";
}

std::vector<std::uint8_t> encode_raster(const Tensor<float>& image) {
  if (image.rank() != 3) throw ShapeError("raster: expected (channels, height, width), got " + to_string(image.shape()));
  io::ByteWriter w;
  w.raw(kMagic);
  for (std::size_t d : image.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : image.data()) w.f32(v);
  return w.take();
}

Tensor<float> decode_raster(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "raster");
  if (r.raw(4) != kMagic) throw FormatError("raster: bad magic (expected AUT1)");
  const std::uint32_t c = r.u32(), h = r.u32(), w = r.u32();
  if (c == 0 || h == 0 || w == 0) {
    throw FormatError("raster: zero extent in header " + std::to_string(c) + "x" + std::to_string(h) + "x" +
                      std::to_string(w));
  }
  const std::uint64_t count = std::uint64_t(c) * h * w;
  if (count * 4 != r.remaining()) {
    throw FormatError("raster: header " + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w) +
                      " needs " + std::to_string(count * 4) + " payload bytes, found " +
                      std::to_string(r.remaining()));
  }
  std::vector<float> data(count);
  for (auto& v : data) {
    v = r.f32();
    if (!(v >= 0.0f && v <= 1.0f)) r.fail("pixel value outside [0, 1]");
  }
  return Tensor<float>({c, h, w}, std::move(data));
}

void save_raster(const std::string& path, const Tensor<float>& image) {
  io::write_file_atomic(path, encode_raster(image), "raster");
}

Tensor<float> load_raster(const std::string& path) {
  try {
    return decode_raster(io::read_file(path, "raster"));
  } catch (const FormatError& e) {
    throw FormatError(std::string(e.what()) + " (" + path + ")");
  }
}

}  // namespace audet
