#include "audet/model/lrp.hpp"

#include <string>

#include "audet/numerics/init.hpp"
#include "audet/numerics/ops.hpp"

namespace audet {

void LrpConfig::validate() const {
  if (num_lanets == 0) throw ConfigError("lrp: num_lanets must be at least 1");
  if (reduction == 0) throw ConfigError("lrp: reduction rate r must be at least 1");
  if (channels % reduction != 0) {
    throw ConfigError("lrp: C_feat=" + std::to_string(channels) +
                      " is not divisible by r=" + std::to_string(reduction));
  }
}

template <std::floating_point T>
Tensor<T> LaNet<T>::forward(const Tensor<T>& features, Tape<T>* tape) {
  Tensor<T> hidden =
      ops::relu(ops::conv1x1(features, use(reduce_weight, tape), use(reduce_bias, tape)));
  return ops::conv1x1(hidden, use(score_weight, tape), use(score_bias, tape));
}

template <std::floating_point T>
LocalRegionPerception<T>::LocalRegionPerception(const LrpConfig& config, Rng& rng)
    : config_(config) {
  config_.validate();
  const std::size_t c = config_.channels, hidden = config_.hidden_channels();
  for (std::size_t i = 0; i < config_.num_lanets; ++i) {
    const std::string prefix = "lrp.lanet" + std::to_string(i);
    LaNet<T> net;
    net.reduce_weight =
        init::fan_in_uniform<T>(prefix + ".conv1.weight", {hidden, c}, c, rng, init::kReluGain);
    net.reduce_bias = init::zeros<T>(prefix + ".conv1.bias", {hidden});
    net.score_weight = init::fan_in_uniform<T>(prefix + ".conv2.weight", {1, hidden}, hidden, rng);
    net.score_bias = init::zeros<T>(prefix + ".conv2.bias", {1});
    lanets_.push_back(std::move(net));
  }
}

template <std::floating_point T>
Tensor<T> LocalRegionPerception<T>::attention(const Tensor<T>& features, Tape<T>* tape) {
  if (features.rank() != 3 || features.dim(0) != config_.channels) {
    throw ShapeError("lrp: expected (" + std::to_string(config_.channels) +
                     ", h, w) features, got " + to_string(features.shape()));
  }
  std::vector<Tensor<T>> scores;
  scores.reserve(lanets_.size());
  for (auto& net : lanets_) scores.push_back(net.forward(features, tape));
  const std::size_t h = features.dim(1), w = features.dim(2);
  // concat() stacks (1, h, w) maps as rows of (M, h*w); restore the channel axis.
  std::vector<Tensor<T>> rows;
  rows.reserve(scores.size());
  for (const auto& s : scores) rows.push_back(ops::reshape(s, {h * w}));
  Tensor<T> stacked = ops::reshape(ops::concat(rows), {scores.size(), h, w});
  return ops::sigmoid(ops::channel_max(stacked));
}

template <std::floating_point T>
void LocalRegionPerception<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto& net : lanets_) {
    out.push_back(&net.reduce_weight);
    out.push_back(&net.reduce_bias);
    out.push_back(&net.score_weight);
    out.push_back(&net.score_bias);
  }
}

template <std::floating_point T>
Tensor<T> apply_attention(const Tensor<T>& features, const Tensor<T>& attention) {
  if (features.rank() != 3 || attention.rank() != 3 || attention.dim(0) != 1 ||
      attention.dim(1) != features.dim(1) || attention.dim(2) != features.dim(2)) {
    throw ShapeError("apply_attention: incompatible shapes " + to_string(features.shape()) +
                     " and " + to_string(attention.shape()));
  }
  return ops::mul(features, attention);
}

template struct LaNet<float>;
template struct LaNet<double>;
template class LocalRegionPerception<float>;
template class LocalRegionPerception<double>;
template Tensor<float> apply_attention(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> apply_attention(const Tensor<double>&, const Tensor<double>&);

}  // namespace audet
