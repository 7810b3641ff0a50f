#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "audet/dataset/fixtures.hpp"
#include "audet/objective/losses.hpp"
#include "audet/objective/metrics.hpp"
#include "audet/trainer/checkpoint.hpp"

namespace audet {

using ProbVector = std::array<double, kNumAus>;

struct TrainData {
  std::vector<FrameRecord> train;  ///< already resampled
  std::vector<FrameRecord> val;    ///< validation frames; empty scores the training frames
  ImageLoader loader;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;  ///< mean over the epoch's batches
  double macro_f1 = 0.0;
  std::array<double, kNumAus> f1{};
  std::size_t steps = 0;  ///< optimizer steps taken so far
};

struct TrainResult {
  std::vector<EpochRecord> history;
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;  ///< highest validation macro F1, earliest on ties
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

/// Called after every epoch, e.g. to stream the history.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Single-stage SGD training of the whole model on one loss. Each step runs
/// a fresh tape over one batch and minimises the batch mean of the
/// per-sample loss. Deterministic given config.seed. A non-finite loss or
/// gradient aborts with NumericError naming the epoch, batch and parameter
/// norms.
TrainResult train(const ModelConfig& config, const TrainSchedule& schedule, const TrainData& data,
                  const EpochCallback& on_epoch = {});

/// Continues training `model` in place.
TrainResult train(AuModel<float>& model, const TrainSchedule& schedule, const TrainData& data,
                  const EpochCallback& on_epoch = {});

struct Prediction {
  std::vector<ProbVector> probs;
  std::vector<std::optional<ProbVector>> fusion_weights;
};

/// Forward passes in record order, no augmentation.
Prediction predict(AuModel<float>& model, const std::vector<FrameRecord>& records, const ImageLoader& loader);

F1Report evaluate(AuModel<float>& model, const std::vector<FrameRecord>& records, const ImageLoader& loader,
                  double threshold = 0.5);

F1Report score(const std::vector<ProbVector>& probs, const std::vector<FrameRecord>& records,
               double threshold = 0.5);

/// One JSON object: epoch, lr, bce, circle, total, macro_f1, f1 {AU: score}.
std::string history_line(const EpochRecord& record);

}  // namespace audet
