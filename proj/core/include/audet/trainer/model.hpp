#pragma once

#include <optional>
#include <vector>

#include "audet/trainer/config.hpp"

namespace audet {

/// One model variant assembled from the toggles of a ModelConfig.
///
///   baseline          probs = sigmoid(backbone logits)
///   + ARL             probs = sigmoid(AU logits from the relation graph)
///   + LRP             the feature map is gated before node extraction
///   + FF              probs = sigmoid(fused logits)
///
/// Initialisation draws from one forked stream per module, so a module's
/// initial weights do not depend on which other modules are enabled.
template <std::floating_point T>
class AuModel {
 public:
  struct Output {
    Tensor<T> logits;  ///< final logits of the active configuration, (12)
    Tensor<T> probs;   ///< sigmoid(logits)
    Tensor<T> backbone_logits;
    std::optional<Tensor<T>> au_logits;
    std::optional<Tensor<T>> attention;       ///< LRP map (1, h, w)
    std::optional<Tensor<T>> fusion_weights;  ///< attention fusion only
    std::optional<RelationGraph> graph;
  };

  /// Validates the config; never reads files (see build_model).
  explicit AuModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// image (3, H, W) in [0, 1]; records on `tape` when non-null.
  Output forward(const Tensor<T>& image, Tape<T>* tape);

  /// Every trainable parameter, in a fixed order.
  std::vector<Parameter<T>*> parameters();
  std::size_t parameter_count();

  Backbone<T>& backbone() { return backbone_; }
  LocalRegionPerception<T>* lrp() { return lrp_ ? &*lrp_ : nullptr; }
  RelationLearning<T>* arl() { return arl_ ? &*arl_ : nullptr; }
  AttentionFusion<T>* fusion() { return fusion_ ? &*fusion_ : nullptr; }

 private:
  ModelConfig config_;
  Backbone<T> backbone_;
  std::optional<LocalRegionPerception<T>> lrp_;
  std::optional<RelationLearning<T>> arl_;
  std::optional<AttentionFusion<T>> fusion_;
};

/// AuModel plus, when load_pretrained_backbone is set, the backbone stage
/// weights read from config.pretrained_backbone.
AuModel<float> build_model(const ModelConfig& config);

}  // namespace audet
