#include "audet/trainer/model.hpp"

#include "audet/numerics/ops.hpp"
#include "audet/trainer/checkpoint.hpp"

namespace audet {

namespace {

enum Stream : std::uint64_t { kBackboneStream = 0, kLrpStream = 1, kArlStream = 2, kFusionStream = 3 };

Rng module_rng(std::uint64_t seed, Stream stream) {
  Rng root(seed);
  return root.fork(stream);
}

const ModelConfig& validated(const ModelConfig& config) {
  config.validate();
  return config;
}

template <std::floating_point T>
Backbone<T> make_backbone(const ModelConfig& config) {
  Rng rng = module_rng(config.seed, kBackboneStream);
  return Backbone<T>(config.backbone, rng);
}

}  // namespace

template <std::floating_point T>
AuModel<T>::AuModel(const ModelConfig& config)
    : config_(validated(config)), backbone_(make_backbone<T>(config)) {
  if (config_.use_lrp) {
    Rng rng = module_rng(config_.seed, kLrpStream);
    lrp_.emplace(config_.lrp(), rng);
  }
  if (config_.use_arl) {
    Rng rng = module_rng(config_.seed, kArlStream);
    arl_.emplace(config_.arl(), rng);
  }
  if (config_.use_ff && config_.ff_variant == FusionVariant::kAttention) {
    Rng rng = module_rng(config_.seed, kFusionStream);
    fusion_.emplace(config_.fusion(), rng);
  }
}

template <std::floating_point T>
typename AuModel<T>::Output AuModel<T>::forward(const Tensor<T>& image, Tape<T>* tape) {
  const auto bb = backbone_.forward(image, tape);
  const Tensor<T> backbone_logits = backbone_.logits(bb.embedding, tape);
  Output out{backbone_logits, backbone_logits, backbone_logits, {}, {}, {}, {}};
  if (arl_) {
    Tensor<T> features = bb.features;
    if (lrp_) {
      out.attention = lrp_->attention(features, tape);
      features = apply_attention(features, *out.attention);
    }
    auto rel = arl_->forward(features, tape);
    out.au_logits = rel.logits;
    out.graph = std::move(rel.graph);
    out.logits = rel.logits;
    if (fusion_) {
      auto fused = fusion_->forward(bb.embedding, rel.refined, backbone_logits, rel.logits, tape);
      out.logits = fused.fused;
      out.fusion_weights = fused.weights;
    } else if (config_.use_ff) {
      out.logits = fuse_fixed(backbone_logits, rel.logits, config_.alpha);
    }
  }
  out.probs = predict_probs(out.logits);
  return out;
}

template <std::floating_point T>
std::vector<Parameter<T>*> AuModel<T>::parameters() {
  std::vector<Parameter<T>*> out;
  backbone_.collect(out);
  if (lrp_) lrp_->collect(out);
  if (arl_) arl_->collect(out);
  if (fusion_) fusion_->collect(out);
  return out;
}

template <std::floating_point T>
std::size_t AuModel<T>::parameter_count() {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

template class AuModel<float>;
template class AuModel<double>;

AuModel<float> build_model(const ModelConfig& config) {
  AuModel<float> model(config);
  if (!config.load_pretrained_backbone) return model;
  const Checkpoint source = load_checkpoint(config.pretrained_backbone);
  auto& bb = model.backbone();
  for (std::size_t i = 0; i < config.backbone.stages(); ++i) {
    for (Parameter<float>* p : {&bb.stage_weight(i), &bb.stage_bias(i)}) {
      const auto it = source.tensors.find(p->name);
      if (it == source.tensors.end()) {
        throw FormatError("pretrained backbone '" + config.pretrained_backbone + "' lacks " + p->name);
      }
      if (it->second.shape() != p->value.shape()) {
        throw FormatError("pretrained backbone: shape mismatch for " + p->name + ": checkpoint " +
                          to_string(it->second.shape()) + " vs model " + to_string(p->value.shape()));
      }
      p->value = it->second;
    }
  }
  return model;
}

}  // namespace audet
