#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "pointsplit/common.hpp"

// Endian-safe little-endian primitives used by the binary cloud, tensor and
// weight-blob formats.

namespace pointsplit::binary_io {

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw io_error("write failed");
}

inline void read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw parse_error("unexpected end of stream");
}

inline void write_u16le(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  write_bytes(out, b, 2);
}

inline void write_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  write_bytes(out, b, 4);
}

inline void write_f32le(std::ostream& out, float v) {
  write_u32le(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint16_t read_u16le(std::istream& in) {
  unsigned char b[2];
  read_bytes(in, b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4];
  read_bytes(in, b, 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float read_f32le(std::istream& in) {
  return std::bit_cast<float>(read_u32le(in));
}

}  // namespace pointsplit::binary_io
