#include "sika/outputs.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

namespace sika {

namespace {

constexpr std::uint8_t kDummyMarker = 0x00;
constexpr std::uint8_t kRecordMarker = 0x01;

void put_le(Bytes& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(ByteSpan in) : in_(in) {}

  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  ByteSpan take(std::size_t n) {
    need(n);
    ByteSpan out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ProtocolError("payload message truncated");
  }
  ByteSpan in_;
  std::size_t pos_ = 0;
};

const char* key_label(PayloadMode mode) { return mode == PayloadMode::psi_id ? "psi-id" : "payload"; }

Bytes id_body(const std::string& id) {
  Bytes out;
  put_le(out, id.size(), 4);
  out.insert(out.end(), id.begin(), id.end());
  return out;
}

}  // namespace

Bytes serialize_attributes(const std::vector<std::string>& atts) {
  Bytes out;
  put_le(out, atts.size(), 4);
  for (const auto& a : atts) {
    put_le(out, a.size(), 4);
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

std::vector<std::string> parse_attributes(ByteSpan bytes, std::size_t* consumed) {
  Reader r(bytes);
  const std::uint64_t count = r.le(4);
  if (count > bytes.size()) {
    throw ProtocolError("attribute count exceeds payload size");
  }
  std::vector<std::string> atts;
  atts.reserve(count);
  for (std::uint64_t f = 0; f < count; ++f) {
    const std::uint64_t len = r.le(4);
    ByteSpan field = r.take(len);
    atts.emplace_back(field.begin(), field.end());
  }
  if (consumed != nullptr) *consumed = r.pos();
  return atts;
}

// ---------------------------------------------------------------------------

Bytes PayloadMessage::serialize() const {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(mode));
  put_le(out, t, 4);
  put_le(out, entries.size(), 8);
  for (const auto& e : entries) {
    out.insert(out.end(), e.bnym.bytes().begin(), e.bnym.bytes().end());
    put_le(out, e.c.serialized_size(), 4);
    e.c.serialize_to(out);
    if (mode == PayloadMode::threshold_payload) {
      if (!e.c_share) throw UsageError("threshold payload entry without share ciphertext");
      put_le(out, e.c_share->serialized_size(), 4);
      e.c_share->serialize_to(out);
    }
  }
  return out;
}

PayloadMessage PayloadMessage::parse(ByteSpan bytes, std::uint32_t kappa) {
  Reader r(bytes);
  PayloadMessage msg;
  const auto mode = r.le(1);
  if (mode < 1 || mode > 3) {
    throw ProtocolError("payload message: unknown mode " + std::to_string(mode));
  }
  msg.mode = static_cast<PayloadMode>(mode);
  msg.t = static_cast<std::uint32_t>(r.le(4));
  const std::uint64_t m = r.le(8);
  const std::size_t kb = kappa / 8;
  if (m > bytes.size() / (kb + 4 + Ciphertext::kNonceBytes + Ciphertext::kTagBytes)) {
    throw ProtocolError("payload message: entry count exceeds message size");
  }
  msg.entries.resize(m);
  for (auto& e : msg.entries) {
    e.bnym = BitString::from_bytes(r.take(kb));
    e.c = Ciphertext::parse(r.take(r.le(4)));
    if (msg.mode == PayloadMode::threshold_payload) {
      e.c_share = Ciphertext::parse(r.take(r.le(4)));
    }
  }
  if (!r.done()) {
    throw ProtocolError("payload message: trailing bytes");
  }
  return msg;
}

// ---------------------------------------------------------------------------

PayloadMessage encrypt_payload(const ProviderOutput& out, std::span<const Record> records, PayloadMode mode,
                               std::optional<ThresholdPolicy> policy, RandomSource& rng, std::size_t pad_bucket) {
  const std::size_t m = out.records.size();
  if (records.size() != out.real_count || out.send_order.size() != m) {
    throw UsageError("encrypt_payload: records do not align with the provider output");
  }
  if (pad_bucket == 0) {
    throw UsageError("encrypt_payload: pad bucket must be positive");
  }
  if (m == 0) {
    throw UsageError("encrypt_payload: empty provider output");
  }
  const std::uint32_t kappa = static_cast<std::uint32_t>(out.records.front().id.bits());

  std::vector<Bytes> plain(m);
  std::size_t longest = 1;
  for (std::size_t k = 0; k < m; ++k) {
    Bytes& pt = plain[k];
    if (k < out.real_count) {
      const std::string id = normalize_id(records[k].raw_id);
      if (id.empty() || hash_id(id, kappa) != out.records[k].id) {
        throw UsageError("encrypt_payload: record " + std::to_string(k + 1) + " does not match provider output");
      }
      pt.push_back(kRecordMarker);
      const Bytes body = mode == PayloadMode::psi_id ? id_body(id) : serialize_attributes(records[k].atts);
      pt.insert(pt.end(), body.begin(), body.end());
    } else {
      pt.push_back(kDummyMarker);
    }
    longest = std::max(longest, pt.size());
  }
  const std::size_t padded = (longest + pad_bucket - 1) / pad_bucket * pad_bucket;
  for (auto& pt : plain) pt.resize(padded, 0);

  PayloadMessage msg;
  msg.mode = mode;
  std::optional<BitString> r;
  std::vector<Share> shares;
  if (mode == PayloadMode::threshold_payload) {
    if (!policy) throw UsageError("encrypt_payload: threshold mode needs a policy");
    if (policy->m != m) throw UsageError("encrypt_payload: threshold policy m must equal the padded size");
    policy->validate();
    msg.t = policy->t;
    r = rng.bits(kappa);
    shares = shamir_split(*r, policy->t, m, rng);
  }

  msg.entries.resize(m);
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t k = out.send_order[e];
    const ProviderRecord& rec = out.records[k];
    PayloadEntry& entry = msg.entries[e];
    entry.bnym = rec.bnym;
    if (mode == PayloadMode::threshold_payload) {
      entry.c = sym_encrypt(derive_key(*r ^ rec.sk, "payload"), plain[k], rng);
      entry.c_share = sym_encrypt(derive_key(rec.sk, "share"), shares[k].serialize(), rng);
    } else {
      entry.c = sym_encrypt(derive_key(rec.sk, key_label(mode)), plain[k], rng);
    }
  }
  return msg;
}

std::uint64_t cardinality(const IntersectionResult& result) { return result.cardinality; }

// ---------------------------------------------------------------------------

namespace {

Bytes decrypt_matched(const SymKey& key, const Ciphertext& ct, std::uint16_t provider, JoinStats& stats) {
  ++stats.decrypt_attempts;
  auto pt = try_sym_decrypt(key, ct);
  if (!pt) {
    throw ProtocolError("matched entry of provider " + std::to_string(provider) + " failed to decrypt");
  }
  return std::move(*pt);
}

ByteSpan record_body(const Bytes& pt, std::uint16_t provider) {
  if (pt.empty() || pt[0] != kRecordMarker) {
    throw ProtocolError("matched entry of provider " + std::to_string(provider) + " is not a record");
  }
  return ByteSpan(pt).subspan(1);
}

}  // namespace

JoinedOutput collector_join(const IntersectionResult& result, const std::map<std::uint16_t, PayloadMessage>& msgs,
                            PayloadMode mode, JoinStats* stats_out) {
  const std::size_t n = result.providers.size();
  JoinStats stats;
  JoinedOutput joined;
  joined.mode = mode;
  joined.cardinality = result.cardinality;
  joined.locked.assign(n, false);
  joined.rows.resize(result.cardinality);
  for (std::uint64_t p = 0; p < result.cardinality; ++p) {
    joined.rows[p].p = p + 1;
    joined.rows[p].atts.resize(n);
  }
  std::vector<std::vector<std::string>> ids_by_provider(n, std::vector<std::string>(result.cardinality));

  for (std::size_t i = 0; i < n; ++i) {
    const auto provider = static_cast<std::uint16_t>(i + 1);
    auto it = msgs.find(provider);
    if (it == msgs.end()) {
      throw ProtocolError("missing payload message from provider " + std::to_string(provider));
    }
    const PayloadMessage& msg = it->second;
    const auto& entries = result.providers[i];
    if (msg.mode != mode) {
      throw ProtocolError("payload message from provider " + std::to_string(provider) + " uses a different mode");
    }
    if (msg.entries.size() != entries.size()) {
      throw ProtocolError("payload message from provider " + std::to_string(provider) + " has the wrong size");
    }

    std::unordered_map<BitString, std::size_t, BitStringHash> by_bnym;
    by_bnym.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) by_bnym.emplace(entries[e].bnym, e);

    struct Match {
      std::size_t msg_entry;
      const ResultEntry* res;
    };
    std::vector<Match> matched;
    std::vector<bool> used(entries.size(), false);
    for (std::size_t e = 0; e < msg.entries.size(); ++e) {
      auto found = by_bnym.find(msg.entries[e].bnym);
      if (found == by_bnym.end() || used[found->second]) {
        throw ProtocolError("payload message from provider " + std::to_string(provider) + " has an unknown bnym");
      }
      used[found->second] = true;
      const ResultEntry& res = entries[found->second];
      if (res.p && res.sk) matched.push_back({e, &res});
    }

    std::optional<BitString> threshold_secret;
    if (mode == PayloadMode::threshold_payload) {
      if (msg.t == 0) {
        throw ProtocolError("threshold payload from provider " + std::to_string(provider) + " has t = 0");
      }
      std::vector<Share> shares;
      for (const Match& mt : matched) {
        const auto& ct = msg.entries[mt.msg_entry].c_share;
        if (!ct) throw ProtocolError("threshold payload entry without share ciphertext");
        shares.push_back(Share::parse(decrypt_matched(derive_key(*mt.res->sk, "share"), *ct, provider, stats)));
      }
      if (shares.size() < msg.t) {
        joined.locked[i] = true;
        continue;
      }
      threshold_secret = shamir_reconstruct(std::move(shares), msg.t);
    }

    for (const Match& mt : matched) {
      const Ciphertext& ct = msg.entries[mt.msg_entry].c;
      const BitString& sk = *mt.res->sk;
      const SymKey key = threshold_secret ? derive_key(*threshold_secret ^ sk, "payload")
                                          : derive_key(sk, key_label(mode));
      const Bytes pt = decrypt_matched(key, ct, provider, stats);
      ByteSpan body = record_body(pt, provider);
      const std::uint64_t row = *mt.res->p - 1;
      if (mode == PayloadMode::psi_id) {
        Reader r(body);
        ByteSpan id = r.take(r.le(4));
        ids_by_provider[i][row].assign(id.begin(), id.end());
        joined.rows[row].atts[i] = std::vector<std::string>{ids_by_provider[i][row]};
      } else {
        joined.rows[row].atts[i] = parse_attributes(body);
      }
    }
  }

  if (mode == PayloadMode::psi_id) {
    for (std::size_t i = 1; i < n; ++i) {
      if (ids_by_provider[i] != ids_by_provider[0]) {
        throw ProtocolError("decrypted identifiers disagree between providers");
      }
    }
    joined.ids = n > 0 ? ids_by_provider[0] : std::vector<std::string>{};
  }
  if (stats_out != nullptr) *stats_out = stats;
  return joined;
}

}  // namespace sika
