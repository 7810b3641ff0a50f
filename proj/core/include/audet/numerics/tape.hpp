#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "audet/numerics/tensor.hpp"

namespace audet {

/// A named trainable tensor with its accumulated gradient.
template <std::floating_point T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  std::vector<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.size(), T(0)) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Records differentiable operations in execution order and replays them
/// backward. A tape is single-use: record, call backward() once, discard.
template <std::floating_point T>
class Tape {
 public:
  /// Receives dLoss/dOutput and adds contributions into the input slots.
  using BackwardFn = std::function<void(std::span<const T> grad_out, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf for a parameter. Gradients reaching it are added to `p.grad`.
  /// Watching the same parameter twice returns the same node.
  Tensor<T> watch(Parameter<T>& p) {
    if (auto it = watched_.find(&p); it != watched_.end()) return bind(p.value, it->second);
    Parameter<T>* target = &p;
    Tensor<T> leaf = record("param:" + p.name, p.value, [target](std::span<const T> g, Tape&) {
      for (std::size_t i = 0; i < g.size(); ++i) target->grad[i] += g[i];
    });
    watched_.emplace(&p, leaf.node());
    return leaf;
  }

  /// Leaf for a plain input whose gradient is read back with grad().
  Tensor<T> input(const Tensor<T>& x) {
    return record("input", x.detach(), [](std::span<const T>, Tape&) {});
  }

  /// Attaches an already computed output to a new node.
  Tensor<T> record(std::string op, const Tensor<T>& output, BackwardFn fn) {
    if (ran_) throw UsageError("tape: cannot record after backward()");
    nodes_.push_back(Node{std::move(op), output.size(), std::move(fn)});
    grads_.emplace_back();
    return bind(output, nodes_.size() - 1);
  }

  /// Gradient buffer of a node, allocated as zeros on first access.
  std::span<T> grad_slot(std::size_t node) {
    auto& g = grads_.at(node);
    if (g.empty()) g.assign(nodes_[node].numel, T(0));
    return g;
  }

  /// Reverse-mode sweep from a scalar loss recorded on this tape.
  void backward(const Tensor<T>& loss) {
    if (loss.tape() != this) throw UsageError("backward: loss was not produced under this tape");
    if (loss.size() != 1) {
      throw UsageError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
    }
    if (ran_) throw UsageError("backward: tape already replayed");
    ran_ = true;
    grad_slot(loss.node())[0] = T(1);
    visit_order_.clear();
    for (std::size_t i = loss.node() + 1; i-- > 0;) {
      if (grads_[i].empty()) continue;
      visit_order_.push_back(i);
      nodes_[i].backward(grads_[i], *this);
    }
  }

  /// dLoss/dx for a tensor recorded on this tape; zeros if unreachable.
  std::vector<T> grad(const Tensor<T>& x) const {
    if (x.tape() != this) throw UsageError("grad: tensor was not recorded on this tape");
    const auto& g = grads_.at(x.node());
    return g.empty() ? std::vector<T>(x.size(), T(0)) : g;
  }

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(std::size_t node) const { return nodes_.at(node).op; }
  /// Node indices visited by the last backward(), in visit order.
  const std::vector<std::size_t>& visit_order() const { return visit_order_; }

 private:
  struct Node {
    std::string op;
    std::size_t numel;
    BackwardFn backward;
  };

  Tensor<T> bind(const Tensor<T>& t, std::size_t node) {
    Tensor<T> out = t;
    out.tape_ = this;
    out.node_ = node;
    return out;
  }

  std::vector<Node> nodes_;
  std::vector<std::vector<T>> grads_;
  std::unordered_map<const Parameter<T>*, std::size_t> watched_;
  std::vector<std::size_t> visit_order_;
  bool ran_ = false;
};

/// Watches `p` on `tape` when recording, otherwise returns its value.
template <std::floating_point T>
Tensor<T> use(Parameter<T>& p, Tape<T>* tape) {
  return tape ? tape->watch(p) : p.value;
}

}  // namespace audet
