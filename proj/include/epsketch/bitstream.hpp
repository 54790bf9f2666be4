#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "epsketch/error.hpp"

namespace epsketch {

/// Append-only bit buffer, most-significant bit first within each byte.
/// Unused low bits of the final byte stay zero.
class BitWriter {
 public:
  void put_bit(bool bit) {
    if ((bits_ & 7U) == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bits_ & 7U));
    ++bits_;
  }

  /// Low `width` bits of `value`, high bit first.
  void put_bits(std::uint64_t value, unsigned width) {
    for (unsigned i = width; i-- > 0;) put_bit(((value >> i) & 1U) != 0);
  }

  void put_unary(std::uint64_t q) {
    for (std::uint64_t i = 0; i < q; ++i) put_bit(true);
    put_bit(false);
  }

  void append(std::span<const std::uint8_t> bytes, std::size_t bit_length) {
    for (std::size_t i = 0; i < bit_length; ++i)
      put_bit(((bytes[i >> 3] >> (7 - (i & 7))) & 1U) != 0);
  }

  std::size_t bit_length() const noexcept { return bits_; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> release() && { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// Reads bits in [begin, end) of a byte buffer.
class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> bytes, std::size_t begin, std::size_t end)
      : bytes_(bytes), pos_(begin), end_(end) {
    if (end > bytes.size() * 8 || begin > end)
      throw DecodeError("bit range exceeds buffer");
  }

  BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_length)
      : BitReader(bytes, 0, bit_length) {}

  bool get_bit() {
    if (pos_ >= end_) throw DecodeError("truncated bit stream");
    const bool bit = ((bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1U) != 0;
    ++pos_;
    return bit;
  }

  std::uint64_t get_bits(unsigned width) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v = (v << 1) | (get_bit() ? 1U : 0U);
    return v;
  }

  /// Counts ones up to the terminating zero; `limit` bounds the run.
  std::uint64_t get_unary(std::uint64_t limit) {
    std::uint64_t q = 0;
    while (get_bit()) {
      if (++q > limit) throw DecodeError("unary run exceeds magnitude bound");
    }
    return q;
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return end_ - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

}  // namespace epsketch
