#include "audet/objective/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "audet/numerics/ops.hpp"
#include "audet/numerics/primitive.hpp"

namespace audet {

namespace {

template <std::floating_point T>
void require_class_vector(std::string_view op, const Tensor<T>& x) {
  if (x.shape() != Shape{kNumAus}) {
    throw ShapeError(std::string(op) + ": expected shape (12), got " + to_string(x.shape()));
  }
}

// log(1 + sum_i e^{v_i}) and its gradient e^{v_i} / (1 + sum e^{v}).
struct SoftplusSum {
  double value = 0.0;
  std::vector<double> grad;
};

SoftplusSum log1p_sum_exp(const std::vector<double>& v) {
  SoftplusSum out;
  double peak = 0.0;  // the implicit 1 is e^0
  for (double x : v) peak = std::max(peak, x);
  double total = std::exp(-peak);
  for (double x : v) total += std::exp(x - peak);
  out.value = peak + std::log(total);
  out.grad.reserve(v.size());
  for (double x : v) out.grad.push_back(std::exp(x - out.value));
  return out;
}

}  // namespace

template <std::floating_point T>
Tensor<T> bce_loss(const Tensor<T>& probs, const LabelVector& labels, bool* all_masked) {
  require_class_vector("bce_loss", probs);
  std::size_t annotated = 0;
  for (auto y : labels) annotated += y != kMasked;
  if (all_masked) *all_masked = annotated == 0;

  const double lo = kProbEpsilon, hi = 1.0 - kProbEpsilon;
  double loss = 0.0;
  std::vector<T> grad(kNumAus, T(0));
  for (std::size_t j = 0; j < kNumAus; ++j) {
    if (labels[j] == kMasked) continue;
    const double y = labels[j];
    const double p = double(probs[j]);
    const double pc = std::clamp(p, lo, hi);
    loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    if (p > lo && p < hi) grad[j] = T(-(y / pc - (1.0 - y) / (1.0 - pc)) / double(annotated));
  }
  if (annotated) loss /= double(annotated);

  Tensor<T> result = detail::make_output("bce_loss", {1}, std::vector<T>{T(loss)});
  Tape<T>* tape = detail::tape_of("bce_loss", {&probs});
  if (!tape) return result;
  return tape->record("bce_loss", result, [probs, grad = std::move(grad)](std::span<const T> g, Tape<T>& t) {
    auto gp = t.grad_slot(probs.node());
    for (std::size_t j = 0; j < kNumAus; ++j) gp[j] += g[0] * grad[j];
  });
}

template <std::floating_point T>
Tensor<T> circle_loss(const Tensor<T>& logits, const LabelVector& labels) {
  require_class_vector("circle_loss", logits);
  std::vector<double> neg, pos;
  std::vector<std::size_t> neg_idx, pos_idx;
  for (std::size_t j = 0; j < kNumAus; ++j) {
    if (labels[j] == 0) {
      neg.push_back(double(logits[j]));
      neg_idx.push_back(j);
    } else if (labels[j] == 1) {
      pos.push_back(-double(logits[j]));
      pos_idx.push_back(j);
    }
  }
  const SoftplusSum n = log1p_sum_exp(neg);
  const SoftplusSum p = log1p_sum_exp(pos);
  std::vector<T> grad(kNumAus, T(0));
  for (std::size_t i = 0; i < neg_idx.size(); ++i) grad[neg_idx[i]] = T(n.grad[i]);
  for (std::size_t i = 0; i < pos_idx.size(); ++i) grad[pos_idx[i]] = T(-p.grad[i]);

  Tensor<T> result = detail::make_output("circle_loss", {1}, std::vector<T>{T(n.value + p.value)});
  Tape<T>* tape = detail::tape_of("circle_loss", {&logits});
  if (!tape) return result;
  return tape->record("circle_loss", result, [logits, grad = std::move(grad)](std::span<const T> g, Tape<T>& t) {
    auto gs = t.grad_slot(logits.node());
    for (std::size_t j = 0; j < kNumAus; ++j) gs[j] += g[0] * grad[j];
  });
}

template <std::floating_point T>
LossTerms<T> total_loss(const Tensor<T>& probs, const Tensor<T>& logits, const LabelVector& labels,
                        bool use_circle) {
  LossTerms<T> terms;
  terms.bce = bce_loss(probs, labels, &terms.all_masked);
  if (use_circle) {
    terms.circle = circle_loss(logits, labels);
    terms.total = ops::add(terms.bce, terms.circle);
  } else {
    terms.circle = Tensor<T>::scalar(T(0));
    terms.total = terms.bce;
  }
  return terms;
}

template Tensor<float> bce_loss(const Tensor<float>&, const LabelVector&, bool*);
template Tensor<double> bce_loss(const Tensor<double>&, const LabelVector&, bool*);
template Tensor<float> circle_loss(const Tensor<float>&, const LabelVector&);
template Tensor<double> circle_loss(const Tensor<double>&, const LabelVector&);
template LossTerms<float> total_loss(const Tensor<float>&, const Tensor<float>&, const LabelVector&, bool);
template LossTerms<double> total_loss(const Tensor<double>&, const Tensor<double>&, const LabelVector&, bool);

}  // namespace audet
