#include "audet/model/backbone.hpp"

#include <string>

#include "audet/au_classes.hpp"
#include "audet/numerics/init.hpp"
#include "audet/numerics/ops.hpp"

namespace audet {

void BackboneConfig::validate() const {
  if (in_channels == 0) throw ConfigError("backbone: in_channels must be positive");
  if (stage_channels.empty()) throw ConfigError("backbone: at least one stage is required");
  for (std::size_t c : stage_channels) {
    if (c == 0) throw ConfigError("backbone: stage channel counts must be positive");
  }
  const std::size_t factor = std::size_t{1} << stages();
  if (height % factor != 0 || width % factor != 0) {
    throw ConfigError("backbone: input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by 2^" + std::to_string(stages()));
  }
  if (feature_height() < 4 || feature_width() < 4) {
    throw ConfigError("backbone: feature map " + std::to_string(feature_height()) + "x" +
                      std::to_string(feature_width()) + " is smaller than 4x4");
  }
}

template <std::floating_point T>
Backbone<T>::Backbone(const BackboneConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  std::size_t in = config_.in_channels;
  for (std::size_t i = 0; i < config_.stages(); ++i) {
    const std::size_t out = config_.stage_channels[i];
    const std::string prefix = "backbone.stage" + std::to_string(i);
    weights_.push_back(init::fan_in_uniform<T>(prefix + ".weight", {out, in, 3, 3}, in * 9, rng,
                                               init::kReluGain));
    biases_.push_back(init::zeros<T>(prefix + ".bias", {out}));
    in = out;
  }
  norm_gamma_ = init::ones<T>("backbone.embed_norm.gamma", {in});
  norm_beta_ = init::zeros<T>("backbone.embed_norm.beta", {in});
  head_weight_ = init::fan_in_uniform<T>("backbone.head.weight", {kNumAus, in}, in, rng);
  head_bias_ = init::zeros<T>("backbone.head.bias", {kNumAus});
}

template <std::floating_point T>
typename Backbone<T>::Output Backbone<T>::forward(const Tensor<T>& image, Tape<T>* tape) {
  const Shape expected{config_.in_channels, config_.height, config_.width};
  if (image.shape() != expected) {
    throw ShapeError("backbone: expected image " + to_string(expected) + ", got " +
                     to_string(image.shape()));
  }
  // [0, 1] -> [-1, 1]
  Tensor<T> x = ops::affine(image, T(2), T(-1));
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    x = ops::relu(ops::conv2d(x, use(weights_[i], tape), use(biases_[i], tape), 2, 1));
  }
  Tensor<T> pooled = ops::global_avg_pool(x);
  Tensor<T> embedding = embed(pooled, tape);
  return {std::move(x), std::move(pooled), std::move(embedding)};
}

template <std::floating_point T>
Tensor<T> Backbone<T>::embed(const Tensor<T>& pooled, Tape<T>* tape) {
  return ops::layer_norm(pooled, use(norm_gamma_, tape), use(norm_beta_, tape));
}

template <std::floating_point T>
Tensor<T> Backbone<T>::logits(const Tensor<T>& embedding, Tape<T>* tape) {
  return ops::linear(embedding, use(head_weight_, tape), use(head_bias_, tape));
}

template <std::floating_point T>
void Backbone<T>::collect(std::vector<Parameter<T>*>& out) {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.push_back(&weights_[i]);
    out.push_back(&biases_[i]);
  }
  out.push_back(&norm_gamma_);
  out.push_back(&norm_beta_);
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
}

template class Backbone<float>;
template class Backbone<double>;

}  // namespace audet
