#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "audet/dataset/manifest.hpp"
#include "audet/numerics/tensor.hpp"

namespace audet {

/// Loads the image of a record.
using ImageLoader = std::function<Tensor<float>(const FrameRecord&)>;

/// Reads `<root>/<record.path>` as an AUT1 raster, caching decoded images.
ImageLoader directory_loader(const std::string& root);

/// Synthetic faces with planted structure. Every AU owns a fixed pair of
/// mirrored regions and a distinct colour code: an active AU paints two
/// square blobs whose colour moves two of the three channels away from the
/// skin tone by +/- delta, one of the 12 sign/channel combinations per AU. Labels follow
/// persistent runs per video, with AU12 tied to AU6 and AU26 only occurring
/// together with AU25.
struct FixtureConfig {
  std::size_t videos = 8;
  std::size_t frames = 200;
  std::size_t size = 64;
  std::uint64_t seed = 7;
  double masked_rate = 0.01;  ///< fraction of frames with every label -1
  bool rare_aus = true;       ///< false keeps AU2/15/23/24/26 inactive
};

/// Manifest records for the fixture, paths "<video>/<frame>.aut1".
std::vector<FrameRecord> fixture_records(const FixtureConfig& config);

/// Deterministic rendering of one record (depends on seed, video, frame and labels).
Tensor<float> render_fixture_frame(const FixtureConfig& config, const FrameRecord& record);

/// Renders on demand instead of reading from disk.
ImageLoader fixture_loader(const FixtureConfig& config);

/// Writes manifest.tsv and every raster under `out_dir`; returns the records.
std::vector<FrameRecord> write_fixture_dataset(const FixtureConfig& config, const std::string& out_dir);

}  // namespace audet
