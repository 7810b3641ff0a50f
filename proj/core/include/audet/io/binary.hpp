#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "audet/errors.hpp"

namespace audet::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes_;
};

/// Reads little-endian scalars; running past the end throws FormatError
/// naming the offset.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }

  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + ": " + msg + " at offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(what_ + ": truncated at offset " + std::to_string(pos_) + " (needed " +
                        std::to_string(n) + " more bytes, " + std::to_string(remaining()) + " left)");
    }
  }

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(U(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path, std::string_view what);

/// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes, std::string_view what);

}  // namespace audet::io
