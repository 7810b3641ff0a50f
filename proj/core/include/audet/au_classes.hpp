#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace audet {

inline constexpr std::size_t kNumAus = 12;

/// Fixed class order used by losses, metrics, manifests and outputs.
inline constexpr std::array<std::string_view, kNumAus> kAuNames = {
    "AU1", "AU2", "AU4", "AU6", "AU7", "AU10", "AU12", "AU15", "AU23", "AU24", "AU25", "AU26"};

/// Index of an AU name in kAuNames, or kNumAus when unknown.
constexpr std::size_t au_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumAus; ++i)
    if (kAuNames[i] == name) return i;
  return kNumAus;
}

/// Per-class annotation: 1 active, 0 inactive, -1 unannotated (ignored).
using LabelVector = std::array<std::int8_t, kNumAus>;

inline constexpr std::int8_t kMasked = -1;

}  // namespace audet
