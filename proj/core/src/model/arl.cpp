#include "audet/model/arl.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "audet/numerics/init.hpp"
#include "audet/numerics/ops.hpp"

namespace audet {

std::vector<std::size_t> RelationGraph::neighbours(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < nodes; ++j)
    if (edge(node, j)) out.push_back(j);
  return out;
}

template <std::floating_point T>
RelationGraph build_topk_graph(const Tensor<T>& nodes, std::size_t k) {
  if (nodes.rank() != 2) throw ShapeError("build_topk_graph: nodes must be (N, d), got " + to_string(nodes.shape()));
  const std::size_t n = nodes.dim(0), d = nodes.dim(1);
  if (k < 1 || k + 1 > n) {
    throw ConfigError("build_topk_graph: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(n - 1) + "]");
  }
  std::vector<double> unit(n * d, 0.0);
  std::vector<bool> degenerate(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0;
    for (std::size_t c = 0; c < d; ++c) norm += double(nodes[i * d + c]) * double(nodes[i * d + c]);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      degenerate[i] = true;
      continue;
    }
    for (std::size_t c = 0; c < d; ++c) unit[i * d + c] = double(nodes[i * d + c]) / norm;
  }

  RelationGraph graph{n, k, std::vector<std::uint8_t>(n * n, 0)};
  std::vector<double> sim(n);
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (degenerate[i] || degenerate[j]) {
        sim[j] = kNone;
        continue;
      }
      double s = 0;
      for (std::size_t c = 0; c < d; ++c) s += unit[i * d + c] * unit[j * d + c];
      sim[j] = s;
    }
    // k rounds of strict-greater argmax keep the lowest index among ties.
    for (std::size_t round = 0; round < k; ++round) {
      std::size_t best = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || graph.adjacency[i * n + j]) continue;
        if (best == n || sim[j] > sim[best]) best = j;
      }
      graph.adjacency[i * n + best] = 1;
    }
  }
  return graph;
}

void write_adjacency(std::ostream& os, const RelationGraph& graph) {
  for (std::size_t i = 0; i < graph.nodes; ++i) {
    for (std::size_t j = 0; j < graph.nodes; ++j) {
      if (j) os << ' ';
      os << (graph.edge(i, j) ? '1' : '0');
    }
    os << '\n';
  }
}

void ArlConfig::validate() const {
  if (channels == 0 || node_dim == 0) throw ConfigError("arl: channels and node_dim must be positive");
  if (k < 1 || k > kNumAus - 1) {
    throw ConfigError("arl: k=" + std::to_string(k) + " outside [1, " + std::to_string(kNumAus - 1) + "]");
  }
  if (layers == 0) throw ConfigError("arl: at least one message-passing layer is required");
}

template <std::floating_point T>
RelationLearning<T>::RelationLearning(const ArlConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t c = config_.channels, d = config_.node_dim;
  projection_weight_ = init::fan_in_uniform<T>("arl.node_proj.weight", {kNumAus * d, c}, c, rng);
  projection_bias_ = init::zeros<T>("arl.node_proj.bias", {kNumAus * d});
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string prefix = "arl.gnn" + std::to_string(l);
    Layer layer;
    layer.self_weight = init::fan_in_uniform<T>(prefix + ".self.weight", {d, d}, d, rng, init::kReluGain);
    layer.neighbour_weight =
        init::fan_in_uniform<T>(prefix + ".neighbour.weight", {d, d}, d, rng, init::kReluGain);
    layer.bias = init::zeros<T>(prefix + ".bias", {d});
    layers_.push_back(std::move(layer));
  }
  head_weight_ = init::fan_in_uniform<T>("arl.head.weight", {kNumAus, kNumAus * d}, kNumAus * d, rng);
  head_bias_ = init::zeros<T>("arl.head.bias", {kNumAus});
}

template <std::floating_point T>
Tensor<T> RelationLearning<T>::node_features(const Tensor<T>& features, Tape<T>* tape) {
  if (features.rank() != 3 || features.dim(0) != config_.channels) {
    throw ShapeError("arl: expected (" + std::to_string(config_.channels) + ", h, w) features, got " +
                     to_string(features.shape()));
  }
  Tensor<T> projected =
      ops::conv1x1(features, use(projection_weight_, tape), use(projection_bias_, tape));
  return ops::reshape(ops::global_avg_pool(projected), {kNumAus, config_.node_dim});
}

template <std::floating_point T>
Tensor<T> RelationLearning<T>::message_pass(const Tensor<T>& nodes, const RelationGraph& graph,
                                            Tape<T>* tape) {
  if (nodes.shape() != Shape{kNumAus, config_.node_dim}) {
    throw ShapeError("arl: expected node features (12, d), got " + to_string(nodes.shape()));
  }
  if (graph.nodes != kNumAus) throw ShapeError("arl: graph must cover the 12 AU nodes");
  std::vector<T> mean_weights(kNumAus * kNumAus, T(0));
  for (std::size_t i = 0; i < graph.adjacency.size(); ++i) {
    if (graph.adjacency[i]) mean_weights[i] = T(1) / T(graph.k);
  }
  const Tensor<T> aggregate(Shape{kNumAus, kNumAus}, std::move(mean_weights));
  Tensor<T> x = nodes;
  for (auto& layer : layers_) {
    Tensor<T> self = ops::linear(x, use(layer.self_weight, tape), use(layer.bias, tape));
    Tensor<T> neighbours = ops::linear(ops::matmul(aggregate, x), use(layer.neighbour_weight, tape));
    x = ops::relu(ops::add(self, neighbours));
  }
  return x;
}

template <std::floating_point T>
Tensor<T> RelationLearning<T>::logits(const Tensor<T>& refined, Tape<T>* tape) {
  Tensor<T> stacked = ops::reshape(refined, {refined.size()});
  return ops::linear(stacked, use(head_weight_, tape), use(head_bias_, tape));
}

template <std::floating_point T>
typename RelationLearning<T>::Output RelationLearning<T>::forward(const Tensor<T>& features,
                                                                  Tape<T>* tape) {
  Output out;
  out.nodes = node_features(features, tape);
  out.graph = build_topk_graph(out.nodes, config_.k);
  out.refined = message_pass(out.nodes, out.graph, tape);
  out.logits = logits(out.refined, tape);
  return out;
}

template <std::floating_point T>
void RelationLearning<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&projection_weight_);
  out.push_back(&projection_bias_);
  for (auto& layer : layers_) {
    out.push_back(&layer.self_weight);
    out.push_back(&layer.neighbour_weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
}

template RelationGraph build_topk_graph(const Tensor<float>&, std::size_t);
template RelationGraph build_topk_graph(const Tensor<double>&, std::size_t);
template class RelationLearning<float>;
template class RelationLearning<double>;

}  // namespace audet
