#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pitr/common.hpp"

namespace pitr {

/// Little-endian binary readers/writers for the model file format.
namespace bin {

inline void write_bytes(std::ostream& out, const void* p, std::size_t size) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(size));
}

inline void read_bytes(std::istream& in, void* p, std::size_t size) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(size));
  if (!in) throw ValidationError("model file truncated");
}

inline void write_u8(std::ostream& out, std::uint8_t v) { write_bytes(out, &v, 1); }

inline std::uint8_t read_u8(std::istream& in) {
  std::uint8_t v;
  read_bytes(in, &v, 1);
  return v;
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  read_bytes(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  read_bytes(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_i32(std::ostream& out, std::int32_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
}

inline std::int32_t read_i32(std::istream& in) { return static_cast<std::int32_t>(read_u32(in)); }

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  write_bytes(out, s.data(), s.size());
}

inline std::string read_string(std::istream& in) {
  const std::uint64_t size = read_u64(in);
  if (size > (1ULL << 32)) throw ValidationError("model file corrupt: oversized string");
  std::string s(size, '\0');
  if (size) read_bytes(in, s.data(), size);
  return s;
}

}  // namespace bin
}  // namespace pitr
