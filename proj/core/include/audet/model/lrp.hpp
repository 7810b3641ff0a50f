#pragma once

#include <cstddef>
#include <vector>

#include "audet/numerics/rng.hpp"
#include "audet/numerics/tape.hpp"

namespace audet {

struct LrpConfig {
  std::size_t num_lanets = 4;  ///< M
  std::size_t reduction = 8;   ///< channel compression rate r
  std::size_t channels = 64;   ///< C_feat of the incoming feature map

  std::size_t hidden_channels() const { return channels / reduction; }

  /// Throws ConfigError when M or r is zero or r does not divide C_feat.
  void validate() const;
};

/// Two 1x1 convolutions, C -> C/r (relu) -> 1, yielding a pre-sigmoid score map.
template <std::floating_point T>
struct LaNet {
  Parameter<T> reduce_weight;  ///< (C/r, C)
  Parameter<T> reduce_bias;    ///< (C/r)
  Parameter<T> score_weight;   ///< (1, C/r)
  Parameter<T> score_bias;     ///< (1)

  /// (C, h, w) -> (1, h, w)
  Tensor<T> forward(const Tensor<T>& features, Tape<T>* tape);
};

/// Local region perception: stacks the LANet score maps, takes the
/// channel-wise max and squashes it into an attention map in (0, 1) that
/// gates every channel of the feature map.
template <std::floating_point T>
class LocalRegionPerception {
 public:
  LocalRegionPerception(const LrpConfig& config, Rng& rng);

  const LrpConfig& config() const { return config_; }

  /// (C, h, w) -> (1, h, w), values in (0, 1).
  Tensor<T> attention(const Tensor<T>& features, Tape<T>* tape);

  void collect(std::vector<Parameter<T>*>& out);

  LaNet<T>& lanet(std::size_t i) { return lanets_.at(i); }
  std::size_t size() const { return lanets_.size(); }

 private:
  LrpConfig config_;
  std::vector<LaNet<T>> lanets_;
};

/// out[c, i, j] = features[c, i, j] * attention[0, i, j]
template <std::floating_point T>
Tensor<T> apply_attention(const Tensor<T>& features, const Tensor<T>& attention);

}  // namespace audet
