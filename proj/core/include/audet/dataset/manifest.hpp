#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "audet/au_classes.hpp"

namespace audet {

/// One annotated video frame.
struct FrameRecord {
  std::string path;  ///< raster path, relative to the data directory
  std::string video_id;
  std::uint32_t frame_index = 0;
  LabelVector labels{};

  bool operator==(const FrameRecord&) const = default;
};

/// Reads `path<TAB>video_id<TAB>frame_index<TAB>l1,...,l12` lines. Blank
/// lines and lines starting with '#' are skipped. Throws FormatError naming
/// the line number for malformed fields, label counts other than 12, labels
/// outside {-1, 0, 1}, duplicate (video_id, frame_index) pairs and frame
/// indices that do not increase within a video.
std::vector<FrameRecord> parse_manifest(std::istream& in);

std::vector<FrameRecord> read_manifest_file(const std::string& path);

void write_manifest(std::ostream& out, std::span<const FrameRecord> records);

void write_manifest_file(const std::string& path, std::span<const FrameRecord> records);

}  // namespace audet
