#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sika/bitstring.hpp"
#include "sika/primitives.hpp"
#include "sika/random.hpp"

namespace sika {

/// Oblivious key-value store over GF(2) built from a random band matrix.
///
/// Each key maps to a row of the (m' x m') system with a run of w random
/// bits (the first forced to 1) starting at a pseudorandom column. Encoding
/// solves the banded system by on-line elimination; unconstrained table rows
/// are filled with uniform randomness so that decodes of absent keys look
/// uniform and the table hides which keys were encoded.

using BandPattern = unsigned __int128;

inline constexpr double kDefaultOkvsExpansion = 0.12;
inline constexpr std::uint32_t kMaxBandWidth = 128;
inline constexpr int kDefaultEncodeRetries = 8;

struct OkvsParams {
  std::uint64_t m = 0;             // number of encoded pairs
  std::uint32_t band_width = 0;    // w, bits
  double expansion = kDefaultOkvsExpansion;
  std::uint32_t kappa = 128;       // key length; values are 2κ bits

  /// w = λ + ⌈log2 m⌉ + 8.
  static OkvsParams for_pairs(std::uint64_t m, const SecurityParams& sp,
                              double expansion = kDefaultOkvsExpansion);

  /// m' = ⌈(1+ε)m⌉ + w.
  std::uint64_t rows() const;
  std::size_t key_bytes() const { return kappa / 8; }
  std::size_t value_bytes() const { return kappa / 4; }
  void validate() const;
};

struct BandRow {
  std::uint64_t start = 0;
  BandPattern pattern = 0;

  friend bool operator==(const BandRow&, const BandRow&) = default;
};

using OkvsSeed = std::array<std::uint8_t, 16>;

/// Keyed hash from a κ-bit key to its band row. AES-128 under the table seed
/// in CBC-MAC form, then two tweaked calls for position and pattern.
class BandHasher {
 public:
  BandHasher(const OkvsSeed& seed, std::uint32_t band_width, std::uint64_t rows);
  BandRow map(ByteSpan key) const;

 private:
  AesBlock aes_;
  std::uint32_t width_;
  std::uint64_t start_range_;
  BandPattern mask_;
};

BandRow band_map(const OkvsSeed& seed, const BitString& key, const OkvsParams& params);

class OkvsTable {
 public:
  static constexpr std::size_t kHeaderBytes = 4 + 1 + 2 + 4 + 8 + 16;

  OkvsTable() = default;
  OkvsTable(std::uint32_t kappa, std::uint32_t band_width, const OkvsSeed& seed, BlockVec rows);

  std::uint32_t kappa() const { return kappa_; }
  std::uint32_t band_width() const { return band_width_; }
  std::uint64_t rows() const { return rows_.size(); }
  const OkvsSeed& seed() const { return seed_; }
  const BlockVec& row_data() const { return rows_; }
  std::size_t value_bytes() const { return kappa_ / 4; }

  BandHasher hasher() const { return BandHasher(seed_, band_width_, rows_.size()); }

  BitString decode(const BitString& key) const;
  /// XOR of the rows selected by `row`; `out` has value_bytes() bytes.
  void decode_row(const BandRow& row, MutableByteSpan out) const;

  std::size_t serialized_size() const { return kHeaderBytes + rows_.raw().size(); }
  /// "OKVS" ‖ version 1 ‖ kappa u16 LE ‖ w u32 LE ‖ m' u64 LE ‖ seed ‖ rows.
  Bytes serialize() const;
  void serialize_to(Bytes& out) const;
  static OkvsTable parse(ByteSpan bytes);

  friend bool operator==(const OkvsTable&, const OkvsTable&) = default;

 private:
  std::uint32_t kappa_ = 128;
  std::uint32_t band_width_ = 0;
  OkvsSeed seed_{};
  BlockVec rows_;
};

/// One elimination attempt with a fixed seed; nullopt when the band system
/// is singular for this seed. Keys must be distinct (not checked here).
std::optional<OkvsTable> okvs_try_encode(const BlockVec& keys, const BlockVec& values,
                                         const OkvsParams& params, const OkvsSeed& seed,
                                         RandomSource& rng);

/// Encodes keys[k] -> values[k]. Resamples the seed on failure, up to
/// `max_retries` attempts in total, then throws EncodeFailure. Duplicate
/// keys or size mismatches throw UsageError.
OkvsTable okvs_encode(const BlockVec& keys, const BlockVec& values, const OkvsParams& params,
                      RandomSource& rng, int max_retries = kDefaultEncodeRetries);

OkvsTable okvs_encode(const std::vector<std::pair<BitString, BitString>>& pairs,
                      const OkvsParams& params, RandomSource& rng,
                      int max_retries = kDefaultEncodeRetries);

BitString okvs_decode(const OkvsTable& table, const BitString& key);

}  // namespace sika
