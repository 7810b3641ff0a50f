#pragma once

#include <cstddef>
#include <vector>

#include "audet/numerics/rng.hpp"
#include "audet/numerics/tape.hpp"

namespace audet {

/// Compact stride-2 convolution stack standing in for a large pretrained
/// face backbone. Each stage is conv3x3 (stride 2, padding 1) + relu, so
/// every stage halves the spatial size. Inputs are mapped from [0, 1] to
/// [-1, 1]. The head reads a layer-normalized copy of the pooled vector:
/// relu features share a large positive offset, and removing it keeps
/// plain SGD on the head well conditioned.
struct BackboneConfig {
  std::size_t in_channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  std::vector<std::size_t> stage_channels = {32, 32, 64, 64};

  std::size_t stages() const { return stage_channels.size(); }
  std::size_t feature_channels() const { return stage_channels.back(); }
  std::size_t feature_height() const { return height >> stages(); }
  std::size_t feature_width() const { return width >> stages(); }

  /// Throws ConfigError unless the input halves cleanly down to >= 4x4.
  void validate() const;
};

template <std::floating_point T>
class Backbone {
 public:
  struct Output {
    Tensor<T> features;  ///< (C_feat, h, w)
    Tensor<T> pooled;    ///< (C_feat), spatial mean of features
    Tensor<T> embedding; ///< (C_feat), embed(pooled)
  };

  Backbone(const BackboneConfig& config, Rng& rng);

  const BackboneConfig& config() const { return config_; }

  /// image (3, H, W) with values in [0, 1].
  Output forward(const Tensor<T>& image, Tape<T>* tape);

  /// Layer norm of the pooled vector with learned gamma and beta.
  Tensor<T> embed(const Tensor<T>& pooled, Tape<T>* tape);

  /// Per-AU raw scores W x + b, applied to the embedding.
  Tensor<T> logits(const Tensor<T>& embedding, Tape<T>* tape);

  void collect(std::vector<Parameter<T>*>& out);

  Parameter<T>& stage_weight(std::size_t i) { return weights_.at(i); }
  Parameter<T>& stage_bias(std::size_t i) { return biases_.at(i); }
  Parameter<T>& head_weight() { return head_weight_; }
  Parameter<T>& head_bias() { return head_bias_; }

 private:
  BackboneConfig config_;
  std::vector<Parameter<T>> weights_;
  std::vector<Parameter<T>> biases_;
  Parameter<T> norm_gamma_;
  Parameter<T> norm_beta_;
  Parameter<T> head_weight_;
  Parameter<T> head_bias_;
};

}  // namespace audet
