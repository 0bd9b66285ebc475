#pragma once

#include <cstdint>
#include <vector>

#include "sika/bitstring.hpp"
#include "sika/random.hpp"

namespace sika {

/// One Shamir share. `y` holds κ/8 bytes: one GF(2^128) evaluation per
/// 128-bit component of the secret.
struct Share {
  std::uint32_t x = 0;
  BitString y;

  std::size_t serialized_size() const { return 4 + y.size_bytes(); }
  /// x u32 LE ‖ y big-endian.
  Bytes serialize() const;
  static Share parse(ByteSpan bytes);

  friend bool operator==(const Share&, const Share&) = default;
};

struct ThresholdPolicy {
  std::uint32_t t = 1;
  std::uint64_t m = 1;

  /// 1 <= t <= m < 2^32.
  void validate() const;
};

/// Shares at x = 1..m of independent degree-(t-1) polynomials, one per
/// 128-bit component of `secret`.
std::vector<Share> shamir_split(const BitString& secret, std::uint32_t t, std::uint64_t m,
                                RandomSource& rng);

/// Lagrange interpolation at zero over the first t shares (by x).
/// Throws InsufficientShares with fewer than t shares and UsageError on
/// duplicate or zero x.
BitString shamir_reconstruct(std::vector<Share> shares, std::uint32_t t);

}  // namespace sika
