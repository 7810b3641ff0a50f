#include "audet/model/fusion.hpp"

#include "audet/au_classes.hpp"
#include "audet/numerics/init.hpp"
#include "audet/numerics/ops.hpp"

namespace audet {

std::string to_string(FusionVariant variant) {
  return variant == FusionVariant::kFixed ? "fixed" : "attention";
}

FusionVariant parse_fusion_variant(const std::string& text) {
  if (text == "fixed") return FusionVariant::kFixed;
  if (text == "attention") return FusionVariant::kAttention;
  throw ConfigError("fusion: unknown variant '" + text + "' (expected fixed or attention)");
}

void FusionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("fusion: alpha=" + std::to_string(alpha) + " outside [0, 1]");
  }
  if (variant == FusionVariant::kFixed) return;
  if (token_dim == 0 || layers == 0 || heads == 0) {
    throw ConfigError("fusion: token_dim, layers and heads must be positive");
  }
  if (token_dim % heads != 0) {
    throw ConfigError("fusion: heads=" + std::to_string(heads) + " do not divide token_dim=" +
                      std::to_string(token_dim));
  }
  if (weight_outputs != kNumAus && weight_outputs != 1) {
    throw ConfigError("fusion: weight_outputs must be 12 (per AU) or 1 (shared)");
  }
}

template <std::floating_point T>
Tensor<T> fuse_fixed(const Tensor<T>& backbone_logits, const Tensor<T>& au_logits, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("fuse_fixed: alpha=" + std::to_string(alpha) + " outside [0, 1]");
  }
  if (alpha == 1.0) return ops::affine(backbone_logits, T(1));
  if (alpha == 0.0) return ops::affine(au_logits, T(1));
  return ops::add(ops::affine(backbone_logits, T(alpha)), ops::affine(au_logits, T(1.0 - alpha)));
}

template <std::floating_point T>
Tensor<T> predict_probs(const Tensor<T>& fused) {
  return ops::sigmoid(fused);
}

template <std::floating_point T>
EncoderLayer<T>::EncoderLayer(const std::string& prefix, std::size_t dim, std::size_t h, Rng& rng)
    : heads(h) {
  auto dense = [&](const std::string& name, std::size_t out, std::size_t in, Parameter<T>& w,
                   Parameter<T>& b, double gain) {
    w = init::fan_in_uniform<T>(prefix + "." + name + ".weight", {out, in}, in, rng, gain);
    b = init::zeros<T>(prefix + "." + name + ".bias", {out});
  };
  dense("q", dim, dim, q_weight, q_bias, 1.0);
  dense("k", dim, dim, k_weight, k_bias, 1.0);
  dense("v", dim, dim, v_weight, v_bias, 1.0);
  dense("o", dim, dim, out_weight, out_bias, 1.0);
  norm1_gamma = init::ones<T>(prefix + ".norm1.gamma", {dim});
  norm1_beta = init::zeros<T>(prefix + ".norm1.beta", {dim});
  dense("ff1", 2 * dim, dim, ff1_weight, ff1_bias, init::kReluGain);
  dense("ff2", dim, 2 * dim, ff2_weight, ff2_bias, 1.0);
  norm2_gamma = init::ones<T>(prefix + ".norm2.gamma", {dim});
  norm2_beta = init::zeros<T>(prefix + ".norm2.beta", {dim});
}

template <std::floating_point T>
Tensor<T> EncoderLayer<T>::forward(const Tensor<T>& tokens, Tape<T>* tape, std::vector<T>* weights) {
  Tensor<T> q = ops::linear(tokens, use(q_weight, tape), use(q_bias, tape));
  Tensor<T> k = ops::linear(tokens, use(k_weight, tape), use(k_bias, tape));
  Tensor<T> v = ops::linear(tokens, use(v_weight, tape), use(v_bias, tape));
  Tensor<T> attended = ops::linear(ops::attention(q, k, v, heads, weights), use(out_weight, tape),
                                   use(out_bias, tape));
  Tensor<T> x = ops::layer_norm(ops::add(tokens, attended), use(norm1_gamma, tape),
                                use(norm1_beta, tape));
  Tensor<T> hidden = ops::relu(ops::linear(x, use(ff1_weight, tape), use(ff1_bias, tape)));
  Tensor<T> ff = ops::linear(hidden, use(ff2_weight, tape), use(ff2_bias, tape));
  return ops::layer_norm(ops::add(x, ff), use(norm2_gamma, tape), use(norm2_beta, tape));
}

template <std::floating_point T>
void EncoderLayer<T>::collect(std::vector<Parameter<T>*>& out) {
  for (Parameter<T>* p : {&q_weight, &q_bias, &k_weight, &k_bias, &v_weight, &v_bias, &out_weight,
                          &out_bias, &norm1_gamma, &norm1_beta, &ff1_weight, &ff1_bias, &ff2_weight,
                          &ff2_bias, &norm2_gamma, &norm2_beta}) {
    out.push_back(p);
  }
}

template <std::floating_point T>
AttentionFusion<T>::AttentionFusion(const FusionConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  if (config_.variant != FusionVariant::kAttention) {
    throw ConfigError("fusion: AttentionFusion requires the attention variant");
  }
  const std::size_t dt = config_.token_dim;
  weight_token_ = init::normal<T>("fusion.weight_token", {dt}, 0.02, rng);
  backbone_token_weight_ =
      init::fan_in_uniform<T>("fusion.backbone_token.weight", {dt, config_.channels}, config_.channels, rng);
  backbone_token_bias_ = init::zeros<T>("fusion.backbone_token.bias", {dt});
  au_token_weight_ =
      init::fan_in_uniform<T>("fusion.au_token.weight", {dt, config_.node_dim}, config_.node_dim, rng);
  au_token_bias_ = init::zeros<T>("fusion.au_token.bias", {dt});
  for (std::size_t l = 0; l < config_.layers; ++l) {
    encoders_.emplace_back("fusion.encoder" + std::to_string(l), dt, config_.heads, rng);
  }
  head_weight_ = init::zeros<T>("fusion.weight_head.weight", {config_.weight_outputs, dt});
  head_bias_ = init::zeros<T>("fusion.weight_head.bias", {config_.weight_outputs});
}

template <std::floating_point T>
Tensor<T> AttentionFusion<T>::tokens(const Tensor<T>& pooled, const Tensor<T>& refined, Tape<T>* tape) {
  if (pooled.shape() != Shape{config_.channels}) {
    throw ShapeError("fusion: expected pooled (" + std::to_string(config_.channels) + "), got " +
                     to_string(pooled.shape()));
  }
  if (refined.shape() != Shape{kNumAus, config_.node_dim}) {
    throw ShapeError("fusion: expected refined nodes (12, d), got " + to_string(refined.shape()));
  }
  Tensor<T> backbone_token =
      ops::linear(pooled, use(backbone_token_weight_, tape), use(backbone_token_bias_, tape));
  Tensor<T> au_tokens = ops::linear(refined, use(au_token_weight_, tape), use(au_token_bias_, tape));
  return ops::concat(std::vector<Tensor<T>>{use(weight_token_, tape), backbone_token, au_tokens});
}

template <std::floating_point T>
typename AttentionFusion<T>::Output AttentionFusion<T>::forward(const Tensor<T>& pooled,
                                                                const Tensor<T>& refined,
                                                                const Tensor<T>& backbone_logits,
                                                                const Tensor<T>& au_logits,
                                                                Tape<T>* tape) {
  if (backbone_logits.shape() != Shape{kNumAus} || au_logits.shape() != Shape{kNumAus}) {
    throw ShapeError("fusion: logits must have shape (12)");
  }
  Tensor<T> x = tokens(pooled, refined, tape);
  for (auto& layer : encoders_) x = layer.forward(x, tape);
  Tensor<T> summary = ops::reshape(ops::slice_rows(x, 0, 1), {config_.token_dim});
  Tensor<T> w = ops::sigmoid(ops::linear(summary, use(head_weight_, tape), use(head_bias_, tape)));
  Tensor<T> fused = ops::add(ops::mul(backbone_logits, w), ops::mul(au_logits, ops::affine(w, T(-1), T(1))));
  return {std::move(fused), std::move(w)};
}

template <std::floating_point T>
void AttentionFusion<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_token_);
  out.push_back(&backbone_token_weight_);
  out.push_back(&backbone_token_bias_);
  out.push_back(&au_token_weight_);
  out.push_back(&au_token_bias_);
  for (auto& layer : encoders_) layer.collect(out);
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
}

template Tensor<float> fuse_fixed(const Tensor<float>&, const Tensor<float>&, double);
template Tensor<double> fuse_fixed(const Tensor<double>&, const Tensor<double>&, double);
template Tensor<float> predict_probs(const Tensor<float>&);
template Tensor<double> predict_probs(const Tensor<double>&);
template struct EncoderLayer<float>;
template struct EncoderLayer<double>;
template class AttentionFusion<float>;
template class AttentionFusion<double>;

}  // namespace audet
