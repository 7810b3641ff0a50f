#include "audet/io/binary.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

namespace audet::io {

std::vector<std::uint8_t> read_file(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(std::string(what) + ": cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes, std::string_view what) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(std::string(what) + ": cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(std::string(what) + ": write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError(std::string(what) + ": cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace audet::io
