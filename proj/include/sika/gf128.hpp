#pragma once

#include <cstdint>

#include "sika/bitstring.hpp"

namespace sika {

/// Element of GF(2^128) = GF(2)[x] / (x^128 + x^7 + x^2 + x + 1).
/// Bit i of the 128-bit integer (hi:lo) is the coefficient of x^i; the
/// byte encoding is the big-endian integer.
struct Gf128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  static constexpr Gf128 zero() { return {0, 0}; }
  static constexpr Gf128 one() { return {0, 1}; }
  static constexpr Gf128 from_u64(std::uint64_t v) { return {0, v}; }
  static Gf128 from_bytes(ByteSpan be16);
  void to_bytes(MutableByteSpan be16) const;

  bool is_zero() const { return hi == 0 && lo == 0; }

  friend constexpr Gf128 operator+(Gf128 a, Gf128 b) { return {a.hi ^ b.hi, a.lo ^ b.lo}; }
  Gf128& operator+=(Gf128 b) {
    hi ^= b.hi;
    lo ^= b.lo;
    return *this;
  }
  friend Gf128 operator*(Gf128 a, Gf128 b);
  Gf128& operator*=(Gf128 b) { return *this = *this * b; }

  /// Multiplicative inverse; throws UsageError for zero.
  Gf128 inverse() const;

  friend constexpr bool operator==(Gf128, Gf128) = default;
};

}  // namespace sika
