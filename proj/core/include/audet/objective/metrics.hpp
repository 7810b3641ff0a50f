#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "audet/au_classes.hpp"

namespace audet {

using BinaryVector = std::array<std::uint8_t, kNumAus>;

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct F1Report {
  std::array<double, kNumAus> per_au{};
  double macro = 0.0;
  std::array<ClassCounts, kNumAus> counts{};
};

/// 1 where prob >= threshold.
BinaryVector binarize(std::span<const double> probs, double threshold = 0.5);

/// F1 = 2TP / (2TP + FP + FN) per class (0 when the denominator is 0),
/// skipping masked labels; macro is the mean of the 12 scores. Throws
/// UsageError on an empty set or mismatched sizes.
F1Report f1_scores(std::span<const BinaryVector> preds, std::span<const LabelVector> labels);

/// Per-AU columns plus Avg., scores as percentages with two decimals.
void write_metrics_table(std::ostream& os, const std::vector<std::string>& row_names,
                         const std::vector<F1Report>& rows);

}  // namespace audet
