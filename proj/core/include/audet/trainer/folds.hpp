#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "audet/objective/metrics.hpp"
#include "audet/trainer/train.hpp"

namespace audet {

/// A train/validation partition by video.
struct Split {
  std::string name;  ///< "official", "fold-1" .. "fold-n"
  std::vector<std::string> train_videos;
  std::vector<std::string> val_videos;
};

/// The official split holds out the last ceil(V / 5) videos in sorted id
/// order. The cross-validation folds shuffle all videos with `seed` and deal
/// them round-robin into `n_folds` validation groups. Returns the official
/// split followed by the folds. Throws ConfigError with fewer videos than
/// folds.
std::vector<Split> make_folds(std::span<const FrameRecord> records, std::size_t n_folds = 4,
                              std::uint64_t seed = 0);

/// Records whose video is in `videos`, in their original order.
std::vector<FrameRecord> select_videos(std::span<const FrameRecord> records, const std::vector<std::string>& videos);

inline constexpr std::size_t kEnsembleSize = 5;

/// Majority vote of exactly five models: each binarized at 0.5, output 1
/// iff at least three vote 1. Throws UsageError for another model count or
/// mismatched sample counts.
std::vector<BinaryVector> ensemble_vote(std::span<const std::vector<ProbVector>> probs);

/// CSV lines `video_id,frame_index,p1..p12,b1..b12`, plus `w1..w12` when
/// `weights` is non-null. A header line names the columns.
void write_predictions(std::ostream& os, const std::vector<FrameRecord>& records,
                       const std::vector<ProbVector>& probs, const std::vector<BinaryVector>& binary,
                       const std::vector<ProbVector>* weights = nullptr);

}  // namespace audet
