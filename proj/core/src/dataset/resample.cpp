#include "audet/dataset/resample.hpp"

#include <algorithm>
#include <map>

#include "audet/errors.hpp"

namespace audet {

bool has_rare_au(const LabelVector& labels) {
  return std::any_of(kRareAus.begin(), kRareAus.end(), [&](std::size_t j) { return labels[j] == 1; });
}

SamplePlan resample(std::span<const FrameRecord> records, const ResampleConfig& config) {
  if (config.base_stride == 0 || config.rare_stride == 0) throw ConfigError("resample: strides must be positive");
  SamplePlan plan;
  if (records.empty()) {
    plan.warnings.push_back("resample: empty manifest, nothing selected");
    return plan;
  }

  // Videos in order of first appearance, frames sorted by index.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_video;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = by_video.try_emplace(records[i].video_id);
    if (inserted) order.push_back(records[i].video_id);
    it->second.push_back(i);
  }

  for (const auto& video : order) {
    auto& frames = by_video[video];
    std::stable_sort(frames.begin(), frames.end(), [&](std::size_t a, std::size_t b) {
      return records[a].frame_index < records[b].frame_index;
    });
    VideoSampleStats stats{video, frames.size(), 0, 0, 0};
    std::size_t rare_seen = 0, base_seen = 0;
    for (std::size_t idx : frames) {
      if (has_rare_au(records[idx].labels)) {
        ++stats.rare_frames;
        if (rare_seen++ % config.rare_stride == 0) {
          plan.indices.push_back(idx);
          ++stats.rare_selected;
        }
      } else if (base_seen++ % config.base_stride == 0) {
        plan.indices.push_back(idx);
        ++stats.base_selected;
      }
    }
    plan.videos.push_back(std::move(stats));
  }
  std::sort(plan.indices.begin(), plan.indices.end());
  plan.indices.erase(std::unique(plan.indices.begin(), plan.indices.end()), plan.indices.end());
  return plan;
}

}  // namespace audet
