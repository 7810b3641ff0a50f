#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "audet/dataset/manifest.hpp"

namespace audet {

/// Minority classes sampled at the denser stride: AU2, AU15, AU23, AU24, AU26.
inline constexpr std::array<std::size_t, 5> kRareAus = {1, 7, 8, 9, 11};

struct ResampleConfig {
  std::size_t base_stride = 10;
  std::size_t rare_stride = 5;
};

struct VideoSampleStats {
  std::string video_id;
  std::size_t frames = 0;
  std::size_t rare_frames = 0;    ///< frames with any rare AU active
  std::size_t base_selected = 0;  ///< picked from the ordinary stream
  std::size_t rare_selected = 0;  ///< picked from the rare-AU stream
};

struct SamplePlan {
  std::vector<std::size_t> indices;  ///< record indices, ascending
  std::vector<VideoSampleStats> videos;
  std::vector<std::string> warnings;

  std::size_t size() const { return indices.size(); }
};

/// True when any rare AU is labelled 1.
bool has_rare_au(const LabelVector& labels);

/// Per video, frames are split into two streams: frames with an active rare
/// AU, and the rest. The rare stream keeps every rare_stride-th frame and the
/// other stream every base_stride-th frame, each counted from the first frame
/// of its stream in frame order. Deterministic, no randomness.
SamplePlan resample(std::span<const FrameRecord> records, const ResampleConfig& config = {});

}  // namespace audet
