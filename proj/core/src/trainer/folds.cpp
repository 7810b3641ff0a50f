#include "audet/trainer/folds.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

namespace audet {

std::vector<Split> make_folds(std::span<const FrameRecord> records, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("make_folds: need at least 2 folds");
  std::set<std::string> unique;
  for (const auto& r : records) {
    if (r.video_id.empty()) throw FormatError("make_folds: record without video_id: " + r.path);
    unique.insert(r.video_id);
  }
  const std::vector<std::string> videos(unique.begin(), unique.end());
  if (videos.size() < n_folds) {
    throw ConfigError("make_folds: " + std::to_string(videos.size()) + " videos cannot fill " +
                      std::to_string(n_folds) + " folds");
  }

  std::vector<Split> splits;
  const std::size_t held_out = (videos.size() + 4) / 5;
  Split official{"official", {}, {}};
  official.train_videos.assign(videos.begin(), videos.end() - held_out);
  official.val_videos.assign(videos.end() - held_out, videos.end());
  splits.push_back(std::move(official));

  std::vector<std::string> shuffled = videos;
  Rng rng(seed);
  rng.shuffle(shuffled);
  for (std::size_t f = 0; f < n_folds; ++f) {
    Split s{"fold-" + std::to_string(f + 1), {}, {}};
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      (i % n_folds == f ? s.val_videos : s.train_videos).push_back(shuffled[i]);
    }
    std::sort(s.train_videos.begin(), s.train_videos.end());
    std::sort(s.val_videos.begin(), s.val_videos.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

std::vector<FrameRecord> select_videos(std::span<const FrameRecord> records, const std::vector<std::string>& videos) {
  const std::set<std::string> keep(videos.begin(), videos.end());
  std::vector<FrameRecord> out;
  for (const auto& r : records) {
    if (keep.contains(r.video_id)) out.push_back(r);
  }
  return out;
}

std::vector<BinaryVector> ensemble_vote(std::span<const std::vector<ProbVector>> probs) {
  if (probs.size() != kEnsembleSize) {
    throw UsageError("ensemble_vote: expected 5 models, got " + std::to_string(probs.size()));
  }
  const std::size_t n = probs[0].size();
  for (std::size_t m = 1; m < probs.size(); ++m) {
    if (probs[m].size() != n) {
      throw UsageError("ensemble_vote: model " + std::to_string(m) + " has " + std::to_string(probs[m].size()) +
                       " samples, model 0 has " + std::to_string(n));
    }
  }
  std::vector<BinaryVector> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kNumAus; ++j) {
      int votes = 0;
      for (const auto& model : probs) votes += model[i][j] >= 0.5 ? 1 : 0;
      out[i][j] = votes >= 3 ? 1 : 0;
    }
  }
  return out;
}

void write_predictions(std::ostream& os, const std::vector<FrameRecord>& records,
                       const std::vector<ProbVector>& probs, const std::vector<BinaryVector>& binary,
                       const std::vector<ProbVector>* weights) {
  if (probs.size() != records.size() || binary.size() != records.size() ||
      (weights && weights->size() != records.size())) {
    throw UsageError("write_predictions: row counts differ");
  }
  os << "video_id,frame_index";
  for (const char* prefix : {"p", "b", "w"}) {
    if (*prefix == 'w' && !weights) break;
    for (std::size_t j = 1; j <= kNumAus; ++j) os << ',' << prefix << j;
  }
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < records.size(); ++i) {
    os << records[i].video_id << ',' << records[i].frame_index;
    for (double p : probs[i]) {
      std::snprintf(buf, sizeof buf, "%.6f", p);
      os << ',' << buf;
    }
    for (auto b : binary[i]) os << ',' << int(b);
    if (weights) {
      for (double w : (*weights)[i]) {
        std::snprintf(buf, sizeof buf, "%.6f", w);
        os << ',' << buf;
      }
    }
    os << '\n';
  }
}

}  // namespace audet
