#include "audet/objective/metrics.hpp"

#include <iomanip>
#include <ostream>

#include "audet/errors.hpp"

namespace audet {

BinaryVector binarize(std::span<const double> probs, double threshold) {
  if (probs.size() != kNumAus) throw UsageError("binarize: expected 12 probabilities");
  BinaryVector out{};
  for (std::size_t j = 0; j < kNumAus; ++j) out[j] = probs[j] >= threshold ? 1 : 0;
  return out;
}

F1Report f1_scores(std::span<const BinaryVector> preds, std::span<const LabelVector> labels) {
  if (preds.empty()) throw UsageError("f1_scores: empty evaluation set");
  if (preds.size() != labels.size()) {
    throw UsageError("f1_scores: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(labels.size()) + " label vectors");
  }
  F1Report report;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    for (std::size_t j = 0; j < kNumAus; ++j) {
      if (labels[n][j] == kMasked) continue;
      ClassCounts& c = report.counts[j];
      const bool p = preds[n][j] != 0, y = labels[n][j] == 1;
      if (p && y) ++c.tp;
      else if (p) ++c.fp;
      else if (y) ++c.fn;
      else ++c.tn;
    }
  }
  double total = 0.0;
  for (std::size_t j = 0; j < kNumAus; ++j) {
    const ClassCounts& c = report.counts[j];
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    report.per_au[j] = denom == 0 ? 0.0 : double(2 * c.tp) / double(denom);
    total += report.per_au[j];
  }
  report.macro = total / double(kNumAus);
  return report;
}

void write_metrics_table(std::ostream& os, const std::vector<std::string>& row_names,
                         const std::vector<F1Report>& rows) {
  std::size_t label_width = 7;
  for (const auto& name : row_names) label_width = std::max(label_width, name.size());
  os << std::left << std::setw(int(label_width)) << "Val Set" << " |";
  for (auto name : kAuNames) os << ' ' << std::right << std::setw(6) << name;
  os << " | " << std::setw(6) << "Avg." << '\n';
  os << std::string(label_width, '-') << "-+" << std::string(kNumAus * 7, '-') << "-+-------\n";
  os << std::fixed << std::setprecision(2);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << std::left << std::setw(int(label_width)) << row_names.at(r) << " |";
    for (double f : rows[r].per_au) os << ' ' << std::right << std::setw(6) << 100.0 * f;
    os << " | " << std::setw(6) << 100.0 * rows[r].macro << '\n';
  }
  os.unsetf(std::ios_base::floatfield);
}

}  // namespace audet
