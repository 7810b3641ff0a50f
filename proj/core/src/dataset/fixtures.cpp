#include "audet/dataset/fixtures.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>

#include "audet/dataset/raster.hpp"
#include "audet/dataset/resample.hpp"
#include "audet/numerics/rng.hpp"

namespace audet {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string video_name(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "vid%03zu", v);
  return buf;
}

// Channel pair and signs of the colour code of AU `i`.
struct ColourCode {
  std::size_t first, second;
  float first_sign, second_sign;
};

ColourCode colour_code(std::size_t au) {
  static constexpr std::size_t kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  const std::size_t pair = au / 4, signs = au % 4;
  return {kPairs[pair][0], kPairs[pair][1], (signs & 1) ? -1.0f : 1.0f, (signs & 2) ? -1.0f : 1.0f};
}

constexpr double kCommonRate = 0.35;
constexpr double kRareRate = 0.2;
constexpr double kCouplingRate = 0.85;  // AU12 copies AU6
constexpr double kAu26GivenAu25 = 0.5;
constexpr std::size_t kAu6 = 3, kAu12 = 6, kAu25 = 10, kAu26 = 11;

// Piecewise-constant on/off process with run lengths in [5, 24].
class RunProcess {
 public:
  RunProcess(double rate, Rng& rng) : rate_(rate) { renew(rng); }

  bool step(Rng& rng) {
    if (remaining_ == 0) renew(rng);
    --remaining_;
    return state_;
  }

 private:
  void renew(Rng& rng) {
    state_ = rng.bernoulli(rate_);
    remaining_ = 5 + rng.below(20);
  }

  double rate_;
  bool state_ = false;
  std::size_t remaining_ = 0;
};

}  // namespace

std::vector<FrameRecord> fixture_records(const FixtureConfig& config) {
  std::vector<FrameRecord> records;
  records.reserve(config.videos * config.frames);
  for (std::size_t v = 0; v < config.videos; ++v) {
    const std::string video = video_name(v);
    Rng rng(config.seed ^ fnv1a(video));
    std::vector<RunProcess> own;
    for (std::size_t j = 0; j < kNumAus; ++j) {
      const bool rare = std::find(kRareAus.begin(), kRareAus.end(), j) != kRareAus.end();
      own.emplace_back(j == kAu26 ? kAu26GivenAu25 : rare ? kRareRate : kCommonRate, rng);
    }
    RunProcess coupled(kCouplingRate, rng);
    for (std::size_t f = 0; f < config.frames; ++f) {
      FrameRecord rec;
      rec.video_id = video;
      rec.frame_index = static_cast<std::uint32_t>(f);
      char path[64];
      std::snprintf(path, sizeof path, "%s/%06zu.aut1", video.c_str(), f);
      rec.path = path;
      for (std::size_t j = 0; j < kNumAus; ++j) rec.labels[j] = own[j].step(rng) ? 1 : 0;
      if (coupled.step(rng)) rec.labels[kAu12] = rec.labels[kAu6];
      rec.labels[kAu26] = rec.labels[kAu25] && rec.labels[kAu26];
      if (!config.rare_aus) {
        for (std::size_t j : kRareAus) rec.labels[j] = 0;
      }
      if (rng.bernoulli(config.masked_rate)) rec.labels.fill(kMasked);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

Tensor<float> render_fixture_frame(const FixtureConfig& config, const FrameRecord& record) {
  const std::size_t n = config.size;
  Rng video_rng(config.seed ^ fnv1a(record.video_id) ^ 0x5bd1e995ULL);
  std::array<float, 3> skin{0.55f, 0.47f, 0.42f};
  for (float& s : skin) s += static_cast<float>(video_rng.uniform(-0.05, 0.05));

  Rng rng(config.seed ^ fnv1a(record.video_id) ^ (0x9E3779B97F4A7C15ULL * (record.frame_index + 1)));
  std::vector<float> px(3 * n * n);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n * n; ++i) px[c * n * n + i] = skin[c] + static_cast<float>(0.02 * rng.normal());

  // AU j owns the mirrored pair of squares in row j / 2, column j % 2 of a
  // 6 x 2 grid over the left half, so the blob layout is left-right symmetric.
  const double unit = double(n) / 64.0;
  const long half_w = std::max(1L, std::lround(6 * unit)), half_h = std::max(1L, std::lround(4 * unit));
  for (std::size_t au = 0; au < kNumAus; ++au) {
    const long dx = static_cast<long>(rng.below(3)) - 1, dy = static_cast<long>(rng.below(3)) - 1;
    const float amp = static_cast<float>(rng.uniform(0.3, 0.4));
    if (record.labels[au] != 1) continue;
    const long cx = std::lround((8 + 16 * double(au % 2)) * unit) + dx;
    const long cy = std::lround((5 + 10 * double(au / 2)) * unit) + dy;
    const ColourCode code = colour_code(au);
    for (long y = std::max(0L, cy - half_h); y < std::min(long(n), cy + half_h); ++y)
      for (long x = std::max(0L, cx - half_w); x < std::min(long(n) / 2, cx + half_w); ++x) {
        for (const std::size_t col : {std::size_t(x), n - 1 - std::size_t(x)}) {
          const std::size_t p = std::size_t(y) * n + col;
          px[code.first * n * n + p] += code.first_sign * amp;
          px[code.second * n * n + p] += code.second_sign * amp;
        }
      }
  }
  for (float& v : px) v = std::clamp(v, 0.0f, 1.0f);
  return Tensor<float>({3, n, n}, std::move(px));
}

ImageLoader fixture_loader(const FixtureConfig& config) {
  return [config](const FrameRecord& rec) { return render_fixture_frame(config, rec); };
}

ImageLoader directory_loader(const std::string& root) {
  auto cache = std::make_shared<std::map<std::string, Tensor<float>>>();
  return [root, cache](const FrameRecord& rec) {
    if (auto it = cache->find(rec.path); it != cache->end()) return it->second;
    Tensor<float> image = load_raster((std::filesystem::path(root) / rec.path).string());
    cache->emplace(rec.path, image);
    return image;
  };
}

std::vector<FrameRecord> write_fixture_dataset(const FixtureConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const std::vector<FrameRecord> records = fixture_records(config);
  fs::create_directories(out_dir);
  for (const auto& rec : records) {
    const fs::path file = fs::path(out_dir) / rec.path;
    fs::create_directories(file.parent_path());
    save_raster(file.string(), render_fixture_frame(config, rec));
  }
  write_manifest_file((fs::path(out_dir) / "manifest.tsv").string(), records);
  return records;
}

}  // namespace audet
