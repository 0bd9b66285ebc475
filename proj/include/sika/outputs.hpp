#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sika/primitives.hpp"
#include "sika/shamir.hpp"
#include "sika/sika.hpp"

namespace sika {

struct Record {
  std::string raw_id;
  std::vector<std::string> atts;
};

enum class PayloadMode : std::uint8_t {
  psi_id = 1,             // encrypt the identifier itself
  payload = 2,            // encrypt the attributes under the per-record key
  threshold_payload = 3,  // additionally gate on |intersection| >= t via Shamir
};

struct PayloadEntry {
  BitString bnym;
  Ciphertext c;
  std::optional<Ciphertext> c_share;  // threshold mode only
};

/// Provider -> collector payload upload, in BMessage entry order.
struct PayloadMessage {
  PayloadMode mode = PayloadMode::payload;
  std::uint32_t t = 0;
  std::vector<PayloadEntry> entries;

  /// mode u8 ‖ t u32 LE ‖ m u64 LE ‖ entries; each entry is
  /// bnym ‖ u32 LE length ‖ ciphertext [‖ u32 LE length ‖ share ciphertext].
  Bytes serialize() const;
  static PayloadMessage parse(ByteSpan bytes, std::uint32_t kappa);
};

inline constexpr std::size_t kDefaultPadBucket = 64;

/// Attribute fields as u32 LE count, then per field u32 LE length ‖ bytes.
Bytes serialize_attributes(const std::vector<std::string>& atts);
std::vector<std::string> parse_attributes(ByteSpan bytes, std::size_t* consumed = nullptr);

/// Encrypts one entry per padded record. `records` are the provider's real
/// records in input order (aligned with out.records[0..real_count)).
/// Plaintexts are padded to one common length, a multiple of `pad_bucket`;
/// dummies carry an empty marker of that same length.
PayloadMessage encrypt_payload(const ProviderOutput& out, std::span<const Record> records, PayloadMode mode,
                               std::optional<ThresholdPolicy> policy, RandomSource& rng,
                               std::size_t pad_bucket = kDefaultPadBucket);

std::uint64_t cardinality(const IntersectionResult& result);

struct JoinedRow {
  std::uint64_t p = 0;
  /// Per provider (0-based): the attributes, or nullopt when locked.
  std::vector<std::optional<std::vector<std::string>>> atts;

  friend bool operator==(const JoinedRow&, const JoinedRow&) = default;
};

struct JoinedOutput {
  PayloadMode mode = PayloadMode::payload;
  std::uint64_t cardinality = 0;
  std::vector<bool> locked;     // per provider
  std::vector<JoinedRow> rows;  // ascending p
  std::vector<std::string> ids; // psi_id mode: identifier for p = index + 1

  friend bool operator==(const JoinedOutput&, const JoinedOutput&) = default;
};

struct JoinStats {
  std::uint64_t decrypt_attempts = 0;
};

/// Decrypts matched entries only and joins them by p. Threshold mode
/// unlocks provider i iff it has at least t^i matched shares.
JoinedOutput collector_join(const IntersectionResult& result, const std::map<std::uint16_t, PayloadMessage>& msgs,
                            PayloadMode mode, JoinStats* stats = nullptr);

}  // namespace sika
