#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sika/errors.hpp"

namespace sika {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;
using MutableByteSpan = std::span<std::uint8_t>;

/// Fixed-length bit string, stored big-endian. Lengths are whole bytes and
/// at most 512 bits (2κ for κ = 256). Length never changes after
/// construction; xor of unequal lengths is a UsageError.
class BitString {
 public:
  static constexpr std::size_t kMaxBytes = 64;

  BitString() = default;
  explicit BitString(std::size_t bits);
  static BitString from_bytes(ByteSpan bytes);
  static BitString from_hex(std::string_view hex);

  std::size_t bits() const { return len_ * 8; }
  std::size_t size_bytes() const { return len_; }
  bool empty() const { return len_ == 0; }

  ByteSpan bytes() const { return {data_.data(), len_}; }
  MutableByteSpan mutable_bytes() { return {data_.data(), len_}; }
  const std::uint8_t* data() const { return data_.data(); }
  std::uint8_t* data() { return data_.data(); }

  bool is_zero() const;
  std::string to_hex() const;

  BitString& operator^=(const BitString& other);
  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

  /// Sub-string of `len_bytes` bytes starting at `offset_bytes`.
  BitString slice(std::size_t offset_bytes, std::size_t len_bytes) const;
  /// Concatenation a ‖ b.
  friend BitString concat(const BitString& a, const BitString& b);

  friend bool operator==(const BitString& a, const BitString& b);
  // Big-endian numeric order for equal lengths; shorter strings sort first.
  friend std::strong_ordering operator<=>(const BitString& a, const BitString& b);

 private:
  std::array<std::uint8_t, kMaxBytes> data_{};
  std::uint8_t len_ = 0;
};

BitString xor_bits(const BitString& a, const BitString& b);

struct BitStringHash {
  std::size_t operator()(const BitString& b) const noexcept;
};

/// XOR `src` into `dst`; both spans must have equal length.
void xor_into(MutableByteSpan dst, ByteSpan src);

/// A flat array of equal-width byte blocks. Used for the large per-record
/// columns (ids, shares, z-matrices, OKVS rows) where a vector of BitString
/// would waste memory.
class BlockVec {
 public:
  BlockVec() = default;
  BlockVec(std::size_t count, std::size_t width_bytes)
      : width_(width_bytes), count_(count), data_(count * width_bytes) {}

  std::size_t size() const { return count_; }
  std::size_t width() const { return width_; }

  MutableByteSpan operator[](std::size_t i) { return {data_.data() + i * width_, width_}; }
  ByteSpan operator[](std::size_t i) const { return {data_.data() + i * width_, width_}; }

  BitString get(std::size_t i) const { return BitString::from_bytes((*this)[i]); }
  void set(std::size_t i, const BitString& v);

  MutableByteSpan raw() { return data_; }
  ByteSpan raw() const { return data_; }

  friend bool operator==(const BlockVec&, const BlockVec&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t count_ = 0;
  Bytes data_;
};

std::string to_hex(ByteSpan bytes);
Bytes from_hex(std::string_view hex);

}  // namespace sika
