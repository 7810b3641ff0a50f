#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "audet/model/arl.hpp"
#include "audet/model/backbone.hpp"
#include "audet/model/fusion.hpp"
#include "audet/model/lrp.hpp"

namespace audet {

/// Module toggles and hyperparameters of one model variant.
struct ModelConfig {
  bool use_circle_loss = true;
  bool load_pretrained_backbone = false;
  std::string pretrained_backbone;  ///< checkpoint whose backbone.stage* tensors are loaded
  bool use_arl = true;
  bool use_lrp = true;
  bool use_ff = true;
  FusionVariant ff_variant = FusionVariant::kAttention;

  BackboneConfig backbone;
  std::size_t r = 8;    ///< LANet channel reduction
  std::size_t M = 4;    ///< number of LANets
  std::size_t k = 3;    ///< graph neighbours per node
  std::size_t d = 32;   ///< node feature size
  std::size_t d_t = 32; ///< fusion token size
  std::size_t heads = 2;
  std::size_t encoder_layers = 2;
  std::size_t gnn_layers = 1;
  double alpha = 0.5;   ///< fixed fusion weight of the backbone logits
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the violated dependency or bad value.
  void validate() const;

  LrpConfig lrp() const;
  ArlConfig arl() const;
  FusionConfig fusion() const;
};

/// Rows of the ablation ladder, 1 (baseline) through 6 (all modules).
/// Row 3 onwards loads backbone weights from `pretrained_backbone`.
inline constexpr int kAblationRows = 6;
ModelConfig ablation_row(int row, const std::string& pretrained_backbone = {});
std::string ablation_row_name(int row);

struct TrainSchedule {
  std::size_t epochs = 15;
  double base_lr = 0.001;
  std::vector<std::size_t> decay_epochs = {4, 6, 8};
  double decay_factor = 0.1;
  std::size_t batch_size = 256;
  std::size_t max_steps = 0;  ///< stop after this many optimizer steps; 0 = no cap
  bool augment = true;
  double threshold = 0.5;     ///< binarization threshold for validation F1

  void validate() const;
};

/// Learning rate of `epoch`: base_lr times decay_factor once per decay
/// epoch already reached. Throws UsageError outside [0, epochs).
double lr_at(std::size_t epoch, const TrainSchedule& schedule);

/// JSON document {"model": {...}, "schedule": {...}}; both sections and
/// every field are optional, unknown keys are rejected with FormatError.
struct RunConfig {
  ModelConfig model;
  TrainSchedule schedule;
};

std::string to_json(const ModelConfig& config);
std::string to_json(const RunConfig& config);
ModelConfig model_config_from_json(const std::string& text);
RunConfig run_config_from_json(const std::string& text);
RunConfig read_run_config(const std::string& path);

}  // namespace audet
