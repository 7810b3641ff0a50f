#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "audet/numerics/rng.hpp"
#include "audet/numerics/tape.hpp"

namespace audet {

enum class FusionVariant { kFixed, kAttention };

std::string to_string(FusionVariant variant);
FusionVariant parse_fusion_variant(const std::string& text);

struct FusionConfig {
  FusionVariant variant = FusionVariant::kAttention;
  double alpha = 0.5;          ///< fixed variant: weight of the backbone logits
  std::size_t token_dim = 32;  ///< d_t
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t channels = 64;   ///< C_feat of the pooled backbone vector
  std::size_t node_dim = 32;   ///< d of the refined AU nodes
  std::size_t weight_outputs = 12;  ///< 12 per-AU weights, or 1 broadcast weight

  void validate() const;
};

/// alpha * backbone + (1 - alpha) * au. Throws ConfigError unless alpha is in [0, 1].
template <std::floating_point T>
Tensor<T> fuse_fixed(const Tensor<T>& backbone_logits, const Tensor<T>& au_logits, double alpha);

/// Probabilities from fused logits.
template <std::floating_point T>
Tensor<T> predict_probs(const Tensor<T>& fused);

/// Post-norm transformer encoder layer over a (tokens, d_t) sequence.
template <std::floating_point T>
struct EncoderLayer {
  Parameter<T> q_weight, q_bias, k_weight, k_bias, v_weight, v_bias, out_weight, out_bias;
  Parameter<T> norm1_gamma, norm1_beta;
  Parameter<T> ff1_weight, ff1_bias, ff2_weight, ff2_bias;
  Parameter<T> norm2_gamma, norm2_beta;
  std::size_t heads = 1;

  EncoderLayer() = default;
  EncoderLayer(const std::string& prefix, std::size_t dim, std::size_t heads, Rng& rng);

  /// Self-attention + residual + layer norm, then relu feed-forward
  /// (hidden 2 * d_t) + residual + layer norm. When `weights` is non-null it
  /// receives the (heads, n, n) attention weights.
  Tensor<T> forward(const Tensor<T>& tokens, Tape<T>* tape, std::vector<T>* weights = nullptr);

  void collect(std::vector<Parameter<T>*>& out);
};

/// Learned fusion: [weight token, backbone token, 12 AU tokens] runs through
/// the encoder stack; the output weight token is mapped to per-AU weights w
/// and fused = w * backbone + (1 - w) * au.
template <std::floating_point T>
class AttentionFusion {
 public:
  struct Output {
    Tensor<T> fused;    ///< (12)
    Tensor<T> weights;  ///< (12) or (1), in (0, 1)
  };

  static constexpr std::size_t kSequenceLength = 14;

  AttentionFusion(const FusionConfig& config, Rng& rng);

  const FusionConfig& config() const { return config_; }

  /// (14, d_t) token sequence from the pooled vector and the refined nodes.
  Tensor<T> tokens(const Tensor<T>& pooled, const Tensor<T>& refined, Tape<T>* tape);

  Output forward(const Tensor<T>& pooled, const Tensor<T>& refined,
                 const Tensor<T>& backbone_logits, const Tensor<T>& au_logits, Tape<T>* tape);

  void collect(std::vector<Parameter<T>*>& out);

  Parameter<T>& weight_token() { return weight_token_; }
  Parameter<T>& head_weight() { return head_weight_; }
  Parameter<T>& head_bias() { return head_bias_; }
  EncoderLayer<T>& encoder(std::size_t i) { return encoders_.at(i); }

 private:
  FusionConfig config_;
  Parameter<T> weight_token_;            ///< (d_t)
  Parameter<T> backbone_token_weight_;   ///< (d_t, C)
  Parameter<T> backbone_token_bias_;
  Parameter<T> au_token_weight_;         ///< (d_t, d), shared by the 12 AU nodes
  Parameter<T> au_token_bias_;
  std::vector<EncoderLayer<T>> encoders_;
  Parameter<T> head_weight_;  ///< (weight_outputs, d_t), zero-initialised
  Parameter<T> head_bias_;
};

}  // namespace audet
