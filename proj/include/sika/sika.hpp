#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sika/bitstring.hpp"
#include "sika/okvs.hpp"
#include "sika/primitives.hpp"
#include "sika/random.hpp"

namespace sika {

using SessionId = std::array<std::uint8_t, 16>;

/// Parameters every party of one session agrees on. Providers are numbered
/// 1..n; m is the padded input size.
struct SessionConfig {
  SessionId session_id{};
  std::uint16_t n = 2;
  std::uint64_t m = 0;
  SecurityParams params;

  void validate() const;
  OkvsParams okvs_params() const { return OkvsParams::for_pairs(m, params); }
  std::size_t block_bytes() const { return params.kappa_bytes(); }
};

/// Trims surrounding ASCII whitespace. Case is preserved.
std::string normalize_id(std::string_view raw);

/// Throws InputError on more than m identifiers, an empty one, or duplicates
/// after normalization.
void check_identifiers(const std::vector<std::string>& raw_ids, std::uint64_t m);

/// One row of a provider's linkage output.
struct ProviderRecord {
  BitString id;
  BitString bnym;
  BitString sk;

  friend bool operator==(const ProviderRecord&, const ProviderRecord&) = default;
};

/// A provider's linkage output: one triple per padded record, in input order (real records first,
/// then dummies). `send_order[e]` is the record index carried by entry e of
/// the BMessage; the PayloadMessage uses the same order.
struct ProviderOutput {
  std::uint16_t index = 0;
  std::size_t real_count = 0;
  std::vector<ProviderRecord> records;
  std::vector<std::uint32_t> send_order;

  friend bool operator==(const ProviderOutput&, const ProviderOutput&) = default;
};

/// Blinded entries plus the blinding key: the only message a provider sends to the collector in
/// the core protocol. zvecs holds m x n blocks, zvecs[e * n + j] being the
/// z-value from provider j+1 for entry e.
struct BMessage {
  BitString key;
  std::uint16_t n = 0;
  BlockVec bnyms;
  BlockVec zvecs;

  std::size_t entries() const { return bnyms.size(); }
  BitString zvec(std::size_t entry, std::size_t j) const { return zvecs.get(entry * n + j); }

  /// kappa u16 LE ‖ n u16 LE ‖ m u64 LE ‖ key ‖ m x (bnym ‖ n z-values).
  Bytes serialize() const;
  static BMessage parse(ByteSpan bytes);

  friend bool operator==(const BMessage&, const BMessage&) = default;
};

enum class ProviderPhase { Init, OkvsSent, Finalized };

/// Provider side of the key agreement.
class Provider {
 public:
  /// Hashes and pads the identifiers and samples key, nym shares and
  /// the n z-values per record. Throws InputError on duplicate identifiers
  /// (after normalization) or more than m of them.
  Provider(const SessionConfig& cfg, std::uint16_t index, const std::vector<std::string>& raw_ids,
           RandomSource& rng);

  /// OKVS for provider j mapping id_k -> (s_k ^ PRP(key, z_kj)) ‖ z_kj.
  OkvsTable build_okvs_for(std::uint16_t j, RandomSource& rng);

  /// Decodes every received table and computes the linkage output and the
  /// blinded message. Requires exactly one table from every other provider.
  std::pair<ProviderOutput, BMessage> finalize(const std::map<std::uint16_t, OkvsTable>& okvs_in,
                                               RandomSource& rng);

  std::uint16_t index() const { return index_; }
  ProviderPhase phase() const { return phase_; }
  const SessionConfig& config() const { return cfg_; }
  std::size_t real_count() const { return real_count_; }
  const BitString& key() const { return key_; }
  const BlockVec& ids() const { return ids_; }
  const BlockVec& nym_shares() const { return shares_; }
  /// z-value z^{i->j}_k for record k and provider j (1-based).
  BitString z(std::size_t k, std::uint16_t j) const { return z_.get(k * cfg_.n + (j - 1)); }
  /// sk_k = XOR over the record's z-row.
  BitString secret_key(std::size_t k) const;

 private:
  SessionConfig cfg_;
  std::uint16_t index_;
  ProviderPhase phase_ = ProviderPhase::Init;
  std::size_t real_count_ = 0;
  BitString key_;
  BlockVec ids_;
  BlockVec shares_;
  BlockVec z_;  // m x n, row-major
};

/// Per-entry collector output; p and sk are empty (⊥) for unmatched entries.
struct ResultEntry {
  BitString bnym;
  std::optional<std::uint64_t> p;
  std::optional<BitString> sk;

  friend bool operator==(const ResultEntry&, const ResultEntry&) = default;
};

/// R: per provider (0-based), entries in the provider's BMessage order.
struct IntersectionResult {
  std::uint64_t cardinality = 0;
  std::vector<std::vector<ResultEntry>> providers;

  friend bool operator==(const IntersectionResult&, const IntersectionResult&) = default;
};

/// Collector side: unblinding, intersection and key recovery.
class Collector {
 public:
  explicit Collector(const SessionConfig& cfg);

  /// Stores the first message from provider i (1-based); returns false and
  /// leaves state untouched for repeats. Malformed sizes throw ProtocolError.
  bool absorb(std::uint16_t i, BMessage msg);
  bool ready() const { return received_.size() == cfg_.n; }
  bool has_message(std::uint16_t i) const { return received_.contains(i); }
  const BMessage& message(std::uint16_t i) const;

  /// N^i for every provider: nyms[i-1][e] is the unblinded nym of entry e.
  std::vector<BlockVec> unblind() const;

  /// Matches nyms present in all n lists, ordered ascending, and recovers
  /// each matched entry's sk from the z-columns of all BMessages.
  IntersectionResult intersect(const std::vector<BlockVec>& nyms) const;

  const SessionConfig& config() const { return cfg_; }

 private:
  SessionConfig cfg_;
  std::map<std::uint16_t, BMessage> received_;
};

}  // namespace sika
