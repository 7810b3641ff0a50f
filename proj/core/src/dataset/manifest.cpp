#include "audet/dataset/manifest.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "audet/errors.hpp"

namespace audet {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw FormatError("manifest line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<FrameRecord> parse_manifest(std::istream& in) {
  std::vector<FrameRecord> records;
  std::set<std::pair<std::string, std::uint32_t>> seen;
  std::map<std::string, std::uint32_t> last_frame;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split(line, '\t');
    if (fields.size() != 4) fail(line_no, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    FrameRecord rec;
    rec.path = std::string(fields[0]);
    rec.video_id = std::string(fields[1]);
    if (rec.path.empty()) fail(line_no, "empty path");
    if (rec.video_id.empty()) fail(line_no, "empty video id");
    if (!parse_int(fields[2], rec.frame_index)) {
      fail(line_no, "frame index '" + std::string(fields[2]) + "' is not a non-negative integer");
    }
    const auto labels = split(fields[3], ',');
    if (labels.size() != kNumAus) {
      fail(line_no, "expected 12 labels, got " + std::to_string(labels.size()));
    }
    for (std::size_t j = 0; j < kNumAus; ++j) {
      int value = 0;
      if (!parse_int(labels[j], value) || value < -1 || value > 1) {
        fail(line_no, "label " + std::string(kAuNames[j]) + " = '" + std::string(labels[j]) +
                          "' is not one of -1, 0, 1");
      }
      rec.labels[j] = static_cast<std::int8_t>(value);
    }
    if (!seen.emplace(rec.video_id, rec.frame_index).second) {
      fail(line_no, "duplicate frame " + std::to_string(rec.frame_index) + " of video " + rec.video_id);
    }
    if (auto it = last_frame.find(rec.video_id); it != last_frame.end() && it->second >= rec.frame_index) {
      fail(line_no, "frame index " + std::to_string(rec.frame_index) + " of video " + rec.video_id +
                        " is not greater than the previous one");
    }
    last_frame[rec.video_id] = rec.frame_index;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<FrameRecord> read_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("manifest: cannot open " + path);
  return parse_manifest(in);
}

void write_manifest(std::ostream& out, std::span<const FrameRecord> records) {
  for (const auto& rec : records) {
    out << rec.path << '\t' << rec.video_id << '\t' << rec.frame_index << '\t';
    for (std::size_t j = 0; j < kNumAus; ++j) {
      if (j) out << ',';
      out << int(rec.labels[j]);
    }
    out << '\n';
  }
}

void write_manifest_file(const std::string& path, std::span<const FrameRecord> records) {
  std::ofstream out(path);
  if (!out) throw FormatError("manifest: cannot write " + path);
  write_manifest(out, records);
  if (!out) throw FormatError("manifest: write failed for " + path);
}

}  // namespace audet
