#pragma once

// Little-endian primitives shared by the matrix and model file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ordnmf/errors.hpp"

namespace ordnmf::detail {

template <typename UInt>
void write_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t b = 0; b < sizeof(UInt); ++b) {
    bytes[b] = static_cast<char>((value >> (8 * b)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt read_le(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("unexpected end of binary file");
  UInt value = 0;
  for (std::size_t b = 0; b < sizeof(UInt); ++b) {
    value |= static_cast<UInt>(bytes[b]) << (8 * b);
  }
  return value;
}

inline void write_f64(std::ostream& out, double value) {
  write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value));
}

inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) throw DataError("not a " + what + " file (bad magic)");
}

}  // namespace ordnmf::detail
