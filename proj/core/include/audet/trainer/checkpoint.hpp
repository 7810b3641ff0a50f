#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "audet/trainer/model.hpp"

namespace audet {

/// Binary layout, little-endian: "AUCK", u32 version, u32 entry count, then
/// per entry (sorted by name) u16 name length, name bytes, u8 rank, u32 dims,
/// f32 payload. Besides parameters two entries carry metadata:
/// "meta.epoch" (one value) and "meta.config" (the model config JSON, one
/// byte per value).
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, Tensor<float>> tensors;  ///< parameters only
  std::string config_json;
  std::uint32_t epoch = 0;  ///< epochs completed when the snapshot was taken

  bool operator==(const Checkpoint& other) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws FormatError on bad magic, version mismatch, truncation (naming
/// the offset) and trailing bytes.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint snapshot(AuModel<float>& model, std::uint32_t epoch);

/// Copies every tensor into the model. Throws FormatError listing missing
/// or unknown parameter names, or naming a shape mismatch; on error the
/// model is left unchanged.
void restore(AuModel<float>& model, const Checkpoint& checkpoint);

/// Rebuilds the model from the stored config, then restores it.
AuModel<float> model_from_checkpoint(const Checkpoint& checkpoint);

inline void save_checkpoint(AuModel<float>& model, const std::string& path, std::uint32_t epoch = 0) {
  save_checkpoint(snapshot(model, epoch), path);
}

inline AuModel<float> load_model(const std::string& path) {
  return model_from_checkpoint(load_checkpoint(path));
}

}  // namespace audet
