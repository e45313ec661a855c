#pragma once

// Little-endian byte buffer helpers shared by the wire formats.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sketchsgd/error.hpp"

namespace sketchsgd::detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::byte>& out) : out_(out) {}

  template <typename U>
  void put_uint(U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
  }
  void put_u8(std::uint8_t v) { put_uint(v); }
  void put_u16(std::uint16_t v) { put_uint(v); }
  void put_u32(std::uint32_t v) { put_uint(v); }
  void put_u64(std::uint64_t v) { put_uint(v); }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
  void put_varint(std::uint64_t v) {
    while (v >= 0x80) {
      put_u8(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    put_u8(static_cast<std::uint8_t>(v));
  }
  void put_bytes(std::span<const std::byte> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

 private:
  std::vector<std::byte>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }

  template <typename U>
  U get_uint() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::uint8_t get_u8() { return get_uint<std::uint8_t>(); }
  std::uint16_t get_u16() { return get_uint<std::uint16_t>(); }
  std::uint32_t get_u32() { return get_uint<std::uint32_t>(); }
  std::uint64_t get_u64() { return get_uint<std::uint64_t>(); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }
  std::uint64_t get_varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t b = get_u8();
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) return v;
    }
    throw Error(ErrorCode::kCorruptMessage, "varint longer than 10 bytes");
  }
  std::span<const std::byte> get_bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kCorruptMessage,
                  "truncated buffer: need " + std::to_string(n) + " bytes, have " +
                      std::to_string(remaining()));
    }
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

}  // namespace sketchsgd::detail
