#pragma once

#include "audet/au_classes.hpp"
#include "audet/numerics/tape.hpp"

namespace audet {

/// Clamp applied to probabilities before taking logarithms.
inline constexpr double kProbEpsilon = 1e-7;

struct LossBreakdown {
  double bce = 0.0;
  double circle = 0.0;
  double total = 0.0;
  bool all_masked = false;  ///< every label was -1; all terms are 0
};

/// Mean binary cross-entropy over the annotated classes, on probabilities
/// clamped to [eps, 1 - eps]. With every class masked the result is 0 and
/// `all_masked` (when given) is set.
template <std::floating_point T>
Tensor<T> bce_loss(const Tensor<T>& probs, const LabelVector& labels, bool* all_masked = nullptr);

/// log(1 + sum_{neg} e^{s_i}) + log(1 + sum_{pos} e^{-s_j}) on raw logits,
/// evaluated with a shifted log-sum-exp. Masked classes join neither set.
template <std::floating_point T>
Tensor<T> circle_loss(const Tensor<T>& logits, const LabelVector& labels);

template <std::floating_point T>
struct LossTerms {
  Tensor<T> bce;
  Tensor<T> circle;
  Tensor<T> total;
  bool all_masked = false;

  LossBreakdown breakdown() const {
    return {double(bce.item()), double(circle.item()), double(total.item()), all_masked};
  }
};

/// bce + circle, or bce alone when `use_circle` is false (circle reported 0).
template <std::floating_point T>
LossTerms<T> total_loss(const Tensor<T>& probs, const Tensor<T>& logits, const LabelVector& labels,
                        bool use_circle);

}  // namespace audet
