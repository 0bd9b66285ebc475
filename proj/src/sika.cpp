#include "sika/sika.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <string>
#include <unordered_map>

#include "sika/kernels.hpp"
#include "sika/log.hpp"

namespace sika {

void SessionConfig::validate() const {
  params.validate();
  if (n < 2) {
    throw UsageError("session needs at least two providers");
  }
  if (m > (std::uint64_t{1} << 32)) {
    throw UsageError("session input size m must be <= 2^32");
  }
}

std::string normalize_id(std::string_view raw) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = raw.find_first_not_of(kSpace);
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = raw.find_last_not_of(kSpace);
  return std::string(raw.substr(first, last - first + 1));
}

// ---------------------------------------------------------------------------
// BMessage wire form

namespace {

void put_le(Bytes& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(ByteSpan in, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | in[off + i];
  return v;
}

}  // namespace

Bytes BMessage::serialize() const {
  const std::size_t kb = key.size_bytes();
  const std::size_t m = bnyms.size();
  Bytes out;
  out.reserve(12 + kb + m * (n + 1) * kb);
  put_le(out, key.bits(), 2);
  put_le(out, n, 2);
  put_le(out, m, 8);
  out.insert(out.end(), key.bytes().begin(), key.bytes().end());
  for (std::size_t e = 0; e < m; ++e) {
    out.insert(out.end(), bnyms[e].begin(), bnyms[e].end());
    auto zs = zvecs.raw().subspan(e * n * kb, n * kb);
    out.insert(out.end(), zs.begin(), zs.end());
  }
  return out;
}

BMessage BMessage::parse(ByteSpan bytes) {
  if (bytes.size() < 12) {
    throw ProtocolError("BMessage: truncated header");
  }
  const auto kappa = get_le(bytes, 0, 2);
  const auto n = static_cast<std::uint16_t>(get_le(bytes, 2, 2));
  const std::uint64_t m = get_le(bytes, 4, 8);
  if (kappa != 128 && kappa != 256) {
    throw ProtocolError("BMessage: bad kappa");
  }
  if (n < 2) {
    throw ProtocolError("BMessage: bad provider count");
  }
  const std::size_t kb = kappa / 8;
  const std::size_t entry = (std::size_t{n} + 1) * kb;
  if (m > (bytes.size() - 12) / entry || bytes.size() != 12 + kb + m * entry) {
    throw ProtocolError("BMessage: size does not match header");
  }
  BMessage msg;
  msg.n = n;
  msg.key = BitString::from_bytes(bytes.subspan(12, kb));
  msg.bnyms = BlockVec(m, kb);
  msg.zvecs = BlockVec(m * n, kb);
  std::size_t off = 12 + kb;
  for (std::uint64_t e = 0; e < m; ++e) {
    std::copy_n(bytes.begin() + off, kb, msg.bnyms[e].begin());
    off += kb;
    std::copy_n(bytes.begin() + off, n * kb, msg.zvecs.raw().begin() + e * n * kb);
    off += n * kb;
  }
  return msg;
}

// ---------------------------------------------------------------------------
// Provider

void check_identifiers(const std::vector<std::string>& raw_ids, std::uint64_t m) {
  if (raw_ids.size() > m) {
    throw InputError("input has " + std::to_string(raw_ids.size()) + " records but the session size m is " +
                     std::to_string(m));
  }
  std::unordered_map<std::string, std::size_t> first_seen;
  std::string offenders;
  for (std::size_t k = 0; k < raw_ids.size(); ++k) {
    std::string id = normalize_id(raw_ids[k]);
    if (id.empty()) {
      throw InputError("record " + std::to_string(k + 1) + " has an empty identifier");
    }
    auto [it, inserted] = first_seen.emplace(id, k);
    if (!inserted) {
      offenders += (offenders.empty() ? "" : "; ") + std::string("records ") + std::to_string(it->second + 1) +
                   " and " + std::to_string(k + 1) + " ('" + id + "')";
    }
  }
  if (!offenders.empty()) {
    throw InputError("duplicate identifiers: " + offenders);
  }
}

Provider::Provider(const SessionConfig& cfg, std::uint16_t index, const std::vector<std::string>& raw_ids,
                   RandomSource& rng)
    : cfg_(cfg), index_(index) {
  cfg_.validate();
  if (index < 1 || index > cfg_.n) {
    throw UsageError("provider index must be in [1, n]");
  }
  check_identifiers(raw_ids, cfg_.m);
  const std::size_t kb = cfg_.block_bytes();
  const std::size_t m = cfg_.m;
  real_count_ = raw_ids.size();

  ids_ = BlockVec(m, kb);
  for (std::size_t k = 0; k < raw_ids.size(); ++k) ids_.set(k, hash_id(normalize_id(raw_ids[k]), cfg_.params.kappa));

  key_ = rng.bits(cfg_.params.kappa);
  shares_ = BlockVec(m, kb);
  rng.fill(shares_.raw());
  z_ = BlockVec(m * cfg_.n, kb);
  rng.fill(z_.raw());
  for (std::size_t k = real_count_; k < m; ++k) {
    rng.fill(ids_[k]);
  }
}

BitString Provider::secret_key(std::size_t k) const {
  BitString sk(cfg_.params.kappa);
  for (std::uint16_t j = 0; j < cfg_.n; ++j) {
    xor_into(sk.mutable_bytes(), z_[k * cfg_.n + j]);
  }
  return sk;
}

OkvsTable Provider::build_okvs_for(std::uint16_t j, RandomSource& rng) {
  if (phase_ == ProviderPhase::Finalized) {
    throw UsageError("build_okvs_for: provider already finalized");
  }
  if (j < 1 || j > cfg_.n || j == index_) {
    throw UsageError("build_okvs_for: destination must be another provider");
  }
  const std::size_t kb = cfg_.block_bytes();
  const std::size_t m = cfg_.m;
  BlockVec blinded(m, kb);
  kernels::blind_shares_batch(Prp(key_), shares_, z_, cfg_.n, j - 1, blinded);

  BlockVec values(m, 2 * kb);
  for (std::size_t k = 0; k < m; ++k) {
    auto v = values[k];
    std::copy(blinded[k].begin(), blinded[k].end(), v.begin());
    auto zk = z_[k * cfg_.n + (j - 1)];
    std::copy(zk.begin(), zk.end(), v.begin() + static_cast<std::ptrdiff_t>(kb));
  }
  OkvsTable table = okvs_encode(ids_, values, cfg_.okvs_params(), rng);
  phase_ = ProviderPhase::OkvsSent;
  return table;
}

std::pair<ProviderOutput, BMessage> Provider::finalize(const std::map<std::uint16_t, OkvsTable>& okvs_in,
                                                       RandomSource& rng) {
  if (phase_ == ProviderPhase::Finalized) {
    throw UsageError("finalize: provider already finalized");
  }
  const OkvsParams expected = cfg_.okvs_params();
  for (std::uint16_t j = 1; j <= cfg_.n; ++j) {
    if (j == index_) continue;
    auto it = okvs_in.find(j);
    if (it == okvs_in.end()) {
      throw ProtocolError("missing OKVS table from provider " + std::to_string(j));
    }
    const OkvsTable& t = it->second;
    if (t.kappa() != cfg_.params.kappa || t.band_width() != expected.band_width || t.rows() != expected.rows()) {
      throw ProtocolError("OKVS table from provider " + std::to_string(j) + " has the wrong size");
    }
  }
  if (okvs_in.size() != static_cast<std::size_t>(cfg_.n - 1)) {
    throw ProtocolError("unexpected OKVS tables: expected exactly one from each other provider");
  }

  const std::size_t kb = cfg_.block_bytes();
  const std::size_t m = cfg_.m;
  const std::size_t n = cfg_.n;

  BlockVec bnyms = shares_;
  BlockVec zin(m * n, kb);  // zin[k*n + j] = z^{j->i}_k, own column j = i
  BlockVec decoded(m, 2 * kb);
  for (std::uint16_t j = 1; j <= cfg_.n; ++j) {
    if (j == index_) {
      for (std::size_t k = 0; k < m; ++k) {
        auto own = z_[k * n + (index_ - 1)];
        std::copy(own.begin(), own.end(), zin[k * n + (j - 1)].begin());
      }
      continue;
    }
    kernels::okvs_decode_batch(okvs_in.at(j), ids_, decoded);
    for (std::size_t k = 0; k < m; ++k) {
      auto v = decoded[k];
      xor_into(bnyms[k], v.first(kb));
      auto zs = v.subspan(kb, kb);
      std::copy(zs.begin(), zs.end(), zin[k * n + (j - 1)].begin());
    }
  }

  ProviderOutput out;
  out.index = index_;
  out.real_count = real_count_;
  out.records.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.records[k] = ProviderRecord{ids_.get(k), bnyms.get(k), secret_key(k)};
  }

  out.send_order.resize(m);
  std::iota(out.send_order.begin(), out.send_order.end(), 0u);
  for (std::size_t e = m; e > 1; --e) {
    const std::size_t r = rng.uniform_below(e);
    std::swap(out.send_order[e - 1], out.send_order[r]);
  }

  BMessage msg;
  msg.key = key_;
  msg.n = cfg_.n;
  msg.bnyms = BlockVec(m, kb);
  msg.zvecs = BlockVec(m * n, kb);
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t k = out.send_order[e];
    std::copy(bnyms[k].begin(), bnyms[k].end(), msg.bnyms[e].begin());
    auto src = zin.raw().subspan(k * n * kb, n * kb);
    std::copy(src.begin(), src.end(), msg.zvecs.raw().begin() + static_cast<std::ptrdiff_t>(e * n * kb));
  }
  phase_ = ProviderPhase::Finalized;
  return {std::move(out), std::move(msg)};
}

// ---------------------------------------------------------------------------
// Collector

Collector::Collector(const SessionConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

bool Collector::absorb(std::uint16_t i, BMessage msg) {
  if (i < 1 || i > cfg_.n) {
    throw ProtocolError("BMessage from unknown provider " + std::to_string(i));
  }
  const std::size_t kb = cfg_.block_bytes();
  if (msg.n != cfg_.n || msg.key.size_bytes() != kb || msg.bnyms.size() != cfg_.m ||
      msg.zvecs.size() != cfg_.m * cfg_.n || (cfg_.m > 0 && (msg.bnyms.width() != kb || msg.zvecs.width() != kb))) {
    throw ProtocolError("BMessage from provider " + std::to_string(i) + " has the wrong shape");
  }
  if (received_.contains(i)) {
    log::info("ignoring repeated BMessage from provider {}", i);
    return false;
  }
  received_.emplace(i, std::move(msg));
  return true;
}

const BMessage& Collector::message(std::uint16_t i) const {
  auto it = received_.find(i);
  if (it == received_.end()) {
    throw UsageError("no BMessage from provider " + std::to_string(i));
  }
  return it->second;
}

std::vector<BlockVec> Collector::unblind() const {
  if (!ready()) {
    throw UsageError("unblind: not all providers have sent their BMessage");
  }
  std::vector<Prp> prps;
  prps.reserve(cfg_.n);
  for (const auto& [i, msg] : received_) {
    prps.emplace_back(msg.key);
  }
  std::vector<BlockVec> nyms;
  nyms.reserve(cfg_.n);
  for (const auto& [i, msg] : received_) {
    BlockVec out(cfg_.m, cfg_.block_bytes());
    kernels::unblind_batch(prps, i - 1, msg.bnyms, msg.zvecs, out);
    nyms.push_back(std::move(out));
  }
  return nyms;
}

IntersectionResult Collector::intersect(const std::vector<BlockVec>& nyms) const {
  if (!ready() || nyms.size() != cfg_.n) {
    throw UsageError("intersect: needs the unblinded nyms of every provider");
  }
  const std::size_t n = cfg_.n;
  const std::size_t m = cfg_.m;
  const std::size_t kb = cfg_.block_bytes();

  auto less = [kb](ByteSpan a, ByteSpan b) { return std::memcmp(a.data(), b.data(), kb) < 0; };
  std::vector<std::vector<std::uint32_t>> sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& idx = sorted[i];
    idx.resize(m);
    std::iota(idx.begin(), idx.end(), 0u);
    const BlockVec& col = nyms[i];
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return less(col[a], col[b]); });
    for (std::size_t e = 1; e < m; ++e) {
      if (std::memcmp(col[idx[e - 1]].data(), col[idx[e]].data(), kb) == 0) {
        throw ProtocolError("nym collision within provider " + std::to_string(i + 1));
      }
    }
  }

  IntersectionResult result;
  result.providers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const BMessage& msg = received_.at(static_cast<std::uint16_t>(i + 1));
    auto& entries = result.providers[i];
    entries.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      entries[e].bnym = msg.bnyms.get(e);
    }
  }

  // Walk provider 1's nyms in ascending order; a nym matches when every
  // other sorted list contains it. Ascending walk yields p in canonical order.
  std::vector<std::size_t> cursor(n, 0);
  std::vector<std::uint32_t> hit(n);
  std::uint64_t p = 0;
  for (std::uint32_t e0 : sorted[0]) {
    ByteSpan target = nyms[0][e0];
    bool all = true;
    hit[0] = e0;
    for (std::size_t i = 1; i < n && all; ++i) {
      auto& c = cursor[i];
      while (c < m && less(nyms[i][sorted[i][c]], target)) ++c;
      if (c == m || std::memcmp(nyms[i][sorted[i][c]].data(), target.data(), kb) != 0) {
        all = false;
      } else {
        hit[i] = sorted[i][c];
      }
    }
    if (!all) continue;
    ++p;
    for (std::size_t i = 0; i < n; ++i) {
      BitString sk(cfg_.params.kappa);
      for (std::size_t j = 0; j < n; ++j) {
        const BMessage& bj = received_.at(static_cast<std::uint16_t>(j + 1));
        xor_into(sk.mutable_bytes(), bj.zvecs[static_cast<std::size_t>(hit[j]) * n + i]);
      }
      auto& entry = result.providers[i][hit[i]];
      entry.p = p;
      entry.sk = sk;
    }
  }
  result.cardinality = p;
  return result;
}

}  // namespace sika
