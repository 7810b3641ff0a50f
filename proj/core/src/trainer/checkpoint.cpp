#include "audet/trainer/checkpoint.hpp"

#include <cstring>
#include <limits>
#include <set>

#include "audet/io/binary.hpp"

namespace audet {

namespace {

constexpr char kMagic[] = "AUCK";
const std::string kEpochEntry = "meta.epoch";
const std::string kConfigEntry = "meta.config";

void put_entry(io::ByteWriter& w, const std::string& name, const Shape& shape, std::span<const float> data) {
  if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw UsageError("checkpoint: name too long: " + name);
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.raw(name);
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
  for (float v : data) w.f32(v);
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& other) const {
  if (epoch != other.epoch || config_json != other.config_json || tensors.size() != other.tensors.size()) {
    return false;
  }
  for (auto a = tensors.begin(), b = other.tensors.begin(); a != tensors.end(); ++a, ++b) {
    if (a->first != b->first || !bitwise_equal(a->second, b->second)) return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  // Metadata rides along as ordinary entries, merged into name order.
  std::map<std::string, std::pair<Shape, std::vector<float>>> entries;
  for (const auto& [name, t] : checkpoint.tensors) {
    if (name.starts_with("meta.")) throw UsageError("checkpoint: reserved parameter name " + name);
    entries[name] = {t.shape(), t.vec()};
  }
  entries[kEpochEntry] = {{1}, {static_cast<float>(checkpoint.epoch)}};
  std::vector<float> config(checkpoint.config_json.begin(), checkpoint.config_json.end());
  if (config.empty()) config.push_back(0.0f);  // extents must be positive
  entries[kConfigEntry] = {{checkpoint.config_json.empty() ? 1 : checkpoint.config_json.size()}, std::move(config)};

  io::ByteWriter w;
  w.raw(kMagic);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, entry] : entries) put_entry(w, name, entry.first, entry.second);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.raw(4) != kMagic) r.fail("bad magic (expected AUCK)");
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    r.fail("version mismatch: file has " + std::to_string(version) + ", reader supports " +
           std::to_string(Checkpoint::kVersion));
  }
  const std::uint32_t count = r.u32();
  Checkpoint out;
  bool saw_epoch = false, saw_config = false;
  std::string previous;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::string name = r.raw(r.u16());
    if (name.empty()) r.fail("empty entry name");
    if (e > 0 && name <= previous) r.fail("entries not sorted by name at '" + name + "'");
    previous = name;
    const std::uint8_t rank = r.u8();
    if (rank == 0) r.fail("entry '" + name + "' has rank 0");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) r.fail("entry '" + name + "' has a zero extent");
      n *= d;
    }
    if (n > r.remaining() / 4) {
      r.fail("truncated payload of '" + name + "' (needs " + std::to_string(n * 4) + " bytes, " +
             std::to_string(r.remaining()) + " left)");
    }
    std::vector<float> data(n);
    for (float& v : data) v = r.f32();
    if (name == kEpochEntry) {
      if (n != 1) r.fail("meta.epoch must hold one value");
      out.epoch = static_cast<std::uint32_t>(data[0]);
      saw_epoch = true;
    } else if (name == kConfigEntry) {
      for (float v : data) {
        if (v != 0.0f) out.config_json.push_back(static_cast<char>(static_cast<unsigned char>(v)));
      }
      saw_config = true;
    } else {
      out.tensors.emplace(name, Tensor<float>(std::move(shape), std::move(data)));
    }
  }
  if (r.remaining() != 0) r.fail(std::to_string(r.remaining()) + " trailing bytes");
  if (!saw_epoch || !saw_config) throw FormatError("checkpoint: missing meta.epoch or meta.config entry");
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  io::write_file_atomic(path, encode_checkpoint(checkpoint), "checkpoint");
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = io::read_file(path, "checkpoint");
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Checkpoint snapshot(AuModel<float>& model, std::uint32_t epoch) {
  Checkpoint c;
  c.epoch = epoch;
  c.config_json = to_json(model.config());
  for (const auto* p : model.parameters()) c.tensors.emplace(p->name, p->value);
  return c;
}

void restore(AuModel<float>& model, const Checkpoint& checkpoint) {
  const auto params = model.parameters();
  std::vector<std::string> missing, unknown;
  std::set<std::string> names;
  for (const auto* p : params) {
    names.insert(p->name);
    const auto it = checkpoint.tensors.find(p->name);
    if (it == checkpoint.tensors.end()) {
      missing.push_back(p->name);
    } else if (it->second.shape() != p->value.shape()) {
      throw FormatError("checkpoint: shape mismatch for " + p->name + ": checkpoint " +
                        to_string(it->second.shape()) + " vs model " + to_string(p->value.shape()));
    }
  }
  for (const auto& [name, t] : checkpoint.tensors) {
    if (!names.contains(name)) unknown.push_back(name);
  }
  if (!missing.empty()) throw FormatError("checkpoint: missing parameters: " + join(missing));
  if (!unknown.empty()) throw FormatError("checkpoint: unknown parameters: " + join(unknown));
  for (auto* p : params) {
    p->value = checkpoint.tensors.at(p->name);
    p->zero_grad();
  }
}

AuModel<float> model_from_checkpoint(const Checkpoint& checkpoint) {
  AuModel<float> model(model_config_from_json(checkpoint.config_json));
  restore(model, checkpoint);
  return model;
}

}  // namespace audet
