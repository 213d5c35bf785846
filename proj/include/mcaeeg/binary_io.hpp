#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "mcaeeg/error.hpp"

namespace mcaeeg::io {

/// Little-endian scalar I/O for the binary containers.
template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  os.write(buf.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  std::array<char, sizeof(T)> buf;
  if (!is.read(buf.data(), sizeof(T))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

/// 64-bit FNV-1a, used for payload checksums.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mcaeeg::io
