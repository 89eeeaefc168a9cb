#pragma once

// Little-endian encoding helpers shared by the EMB1 and MMDK formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mmdmp/error.hpp"

namespace mmdmp::detail {

using Bytes = std::vector<unsigned char>;

template <typename U>
void put_le(Bytes& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u32(Bytes& out, std::uint32_t v) { put_le(out, v); }
inline void put_f32(Bytes& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(Bytes& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

/// Bounds-checked cursor over a byte buffer.
class Reader {
 public:
  Reader(const Bytes& b, std::string what) : b_(b), what_(std::move(what)) {}

  [[nodiscard]] std::size_t remaining() const { return b_.size() - at_; }
  [[nodiscard]] std::size_t position() const { return at_; }

  void need(std::size_t n, const std::string& field) const {
    if (remaining() < n) {
      throw FormatError(what_ + ": truncated while reading " + field + " (expected " + std::to_string(n) +
                        " more bytes, " + std::to_string(remaining()) + " available)");
    }
  }

  template <typename U>
  U get_le(const std::string& field) {
    need(sizeof(U), field);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[at_ + i]) << (8 * i));
    at_ += sizeof(U);
    return v;
  }

  std::uint32_t u32(const std::string& field) { return get_le<std::uint32_t>(field); }
  float f32(const std::string& field) { return std::bit_cast<float>(get_le<std::uint32_t>(field)); }
  double f64(const std::string& field) { return std::bit_cast<double>(get_le<std::uint64_t>(field)); }

  std::string text(std::size_t n, const std::string& field) {
    need(n, field);
    std::string s(reinterpret_cast<const char*>(b_.data() + at_), n);
    at_ += n;
    return s;
  }

 private:
  const Bytes& b_;
  std::string what_;
  std::size_t at_ = 0;
};

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write to '" + path + "' failed");
}

}  // namespace mmdmp::detail
