#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "audet/au_classes.hpp"
#include "audet/numerics/rng.hpp"
#include "audet/numerics/tape.hpp"

namespace audet {

/// Per-sample relation graph: row i marks the k neighbours of node i.
struct RelationGraph {
  std::size_t nodes = 0;
  std::size_t k = 0;
  std::vector<std::uint8_t> adjacency;  ///< nodes x nodes, row-major

  bool edge(std::size_t from, std::size_t to) const { return adjacency[from * nodes + to] != 0; }
  std::vector<std::size_t> neighbours(std::size_t node) const;

  bool operator==(const RelationGraph&) const = default;
};

/// Top-k graph over cosine similarity of the node rows of `nodes` (N, d).
/// Each node links to the k most similar other nodes; equal similarities
/// prefer the lower index. A zero-norm vector has similarity -inf to every
/// node and from every node. Throws ConfigError unless 1 <= k <= N - 1.
template <std::floating_point T>
RelationGraph build_topk_graph(const Tensor<T>& nodes, std::size_t k);

/// Writes the adjacency as a 0/1 grid, one row per line.
void write_adjacency(std::ostream& os, const RelationGraph& graph);

struct ArlConfig {
  std::size_t channels = 64;  ///< C_feat of the incoming feature map
  std::size_t node_dim = 32;  ///< d
  std::size_t k = 3;
  std::size_t layers = 1;

  void validate() const;
};

/// AU relationship learning: one feature vector per AU class, a per-sample
/// top-k graph, neighbour-mean message passing and a stacked logit head.
template <std::floating_point T>
class RelationLearning {
 public:
  struct Layer {
    Parameter<T> self_weight;       ///< (d, d)
    Parameter<T> neighbour_weight;  ///< (d, d)
    Parameter<T> bias;              ///< (d)
  };

  struct Output {
    Tensor<T> nodes;      ///< V, (12, d)
    RelationGraph graph;  ///< built from V
    Tensor<T> refined;    ///< V', (12, d)
    Tensor<T> logits;     ///< (12)
  };

  RelationLearning(const ArlConfig& config, Rng& rng);

  const ArlConfig& config() const { return config_; }

  /// Per-class 1x1 projection C_feat -> d at every location, then average
  /// pooling: (C, h, w) -> (12, d).
  Tensor<T> node_features(const Tensor<T>& features, Tape<T>* tape);

  /// v'_i = relu(W_self v_i + (1/k) sum_{j in N(i)} W_nb v_j + b), per layer.
  /// The graph is a constant structure: no gradient flows through it.
  Tensor<T> message_pass(const Tensor<T>& nodes, const RelationGraph& graph, Tape<T>* tape);

  /// Concatenates the 12 node vectors and maps them to 12 logits.
  Tensor<T> logits(const Tensor<T>& refined, Tape<T>* tape);

  Output forward(const Tensor<T>& features, Tape<T>* tape);

  void collect(std::vector<Parameter<T>*>& out);

  Parameter<T>& projection_weight() { return projection_weight_; }
  Parameter<T>& projection_bias() { return projection_bias_; }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  Parameter<T>& head_weight() { return head_weight_; }
  Parameter<T>& head_bias() { return head_bias_; }

 private:
  ArlConfig config_;
  Parameter<T> projection_weight_;  ///< (12 * d, C): class i owns rows [i*d, (i+1)*d)
  Parameter<T> projection_bias_;    ///< (12 * d)
  std::vector<Layer> layers_;
  Parameter<T> head_weight_;  ///< (12, 12 * d)
  Parameter<T> head_bias_;    ///< (12)
};

}  // namespace audet
