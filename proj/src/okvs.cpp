#include "sika/okvs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <unordered_set>

#include "sika/kernels.hpp"

namespace sika {

namespace {

int ctz128(BandPattern p) {
  const auto lo = static_cast<std::uint64_t>(p);
  if (lo != 0) {
    return std::countr_zero(lo);
  }
  return 64 + std::countr_zero(static_cast<std::uint64_t>(p >> 64));
}

BandPattern width_mask(std::uint32_t w) {
  return w >= 128 ? ~BandPattern{0} : ((BandPattern{1} << w) - 1);
}

std::uint32_t ceil_log2(std::uint64_t m) {
  std::uint32_t bits = 0;
  while ((std::uint64_t{1} << bits) < m) {
    ++bits;
  }
  return bits;
}

void put_le(Bytes& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

std::uint64_t get_le(ByteSpan in, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) {
    v = (v << 8) | in[off + i];
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

OkvsParams OkvsParams::for_pairs(std::uint64_t m, const SecurityParams& sp, double expansion) {
  sp.validate();
  OkvsParams p;
  p.m = m;
  p.kappa = sp.kappa;
  p.expansion = expansion;
  p.band_width = sp.lambda + ceil_log2(std::max<std::uint64_t>(m, 1)) + 8;
  p.validate();
  return p;
}

std::uint64_t OkvsParams::rows() const {
  return static_cast<std::uint64_t>(std::ceil((1.0 + expansion) * static_cast<double>(m))) +
         band_width;
}

void OkvsParams::validate() const {
  if (kappa != 128 && kappa != 256) {
    throw UsageError("OKVS: kappa must be 128 or 256");
  }
  if (band_width == 0 || band_width > kMaxBandWidth) {
    throw UsageError("OKVS: band width must be in [1, 128], got " + std::to_string(band_width));
  }
  if (!(expansion > 0.0)) {
    throw UsageError("OKVS: expansion must be positive");
  }
}

// ---------------------------------------------------------------------------

BandHasher::BandHasher(const OkvsSeed& seed, std::uint32_t band_width, std::uint64_t rows)
    : aes_(seed), width_(band_width), start_range_(rows - band_width + 1), mask_(width_mask(band_width)) {
  if (band_width == 0 || band_width > kMaxBandWidth || rows < band_width) {
    throw UsageError("BandHasher: invalid band geometry");
  }
}

BandRow BandHasher::map(ByteSpan key) const {
  if (key.size() != 16 && key.size() != 32) {
    throw UsageError("band_map: key must be 128 or 256 bits");
  }
  std::uint8_t h[16];
  aes_.encrypt(key.first(16), h);
  if (key.size() == 32) {
    for (int i = 0; i < 16; ++i) h[i] ^= key[16 + i];
    aes_.encrypt(h, h);
  }
  std::uint8_t in[32];
  std::uint8_t out[32];
  std::memcpy(in, h, 16);
  std::memcpy(in + 16, h, 16);
  in[15] ^= 0x01;
  in[31] ^= 0x02;
  aes_.encrypt(in, out);

  std::uint64_t pos;
  std::memcpy(&pos, out, 8);
  std::uint64_t plo;
  std::uint64_t phi;
  std::memcpy(&plo, out + 16, 8);
  std::memcpy(&phi, out + 24, 8);

  BandRow row;
  // start_range_ is far below 2^64, so the modulo bias is negligible.
  row.start = pos % start_range_;
  row.pattern = ((BandPattern{phi} << 64 | plo) & mask_) | 1;
  return row;
}

BandRow band_map(const OkvsSeed& seed, const BitString& key, const OkvsParams& params) {
  params.validate();
  if (key.bits() != params.kappa) {
    throw UsageError("band_map: key length must equal kappa");
  }
  return BandHasher(seed, params.band_width, params.rows()).map(key.bytes());
}

// ---------------------------------------------------------------------------

OkvsTable::OkvsTable(std::uint32_t kappa, std::uint32_t band_width, const OkvsSeed& seed, BlockVec rows)
    : kappa_(kappa), band_width_(band_width), seed_(seed), rows_(std::move(rows)) {}

void OkvsTable::decode_row(const BandRow& row, MutableByteSpan out) const {
  const std::size_t vb = value_bytes();
  std::memset(out.data(), 0, vb);
  BandPattern p = row.pattern;
  while (p != 0) {
    const int j = ctz128(p);
    p &= p - 1;
    xor_into(out, rows_[row.start + static_cast<std::uint64_t>(j)]);
  }
}

BitString OkvsTable::decode(const BitString& key) const {
  if (key.bits() != kappa_) {
    throw UsageError("OKVS decode: key length must equal kappa");
  }
  BitString out(kappa_ * 2);
  decode_row(hasher().map(key.bytes()), out.mutable_bytes());
  return out;
}

BitString okvs_decode(const OkvsTable& table, const BitString& key) { return table.decode(key); }

void OkvsTable::serialize_to(Bytes& out) const {
  out.reserve(out.size() + serialized_size());
  out.insert(out.end(), {'O', 'K', 'V', 'S'});
  out.push_back(1);
  put_le(out, kappa_, 2);
  put_le(out, band_width_, 4);
  put_le(out, rows_.size(), 8);
  out.insert(out.end(), seed_.begin(), seed_.end());
  out.insert(out.end(), rows_.raw().begin(), rows_.raw().end());
}

Bytes OkvsTable::serialize() const {
  Bytes out;
  serialize_to(out);
  return out;
}

OkvsTable OkvsTable::parse(ByteSpan bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "OKVS", 4) != 0) {
    throw ProtocolError("OKVS table: bad magic");
  }
  if (bytes[4] != 1) {
    throw ProtocolError("OKVS table: unsupported version " + std::to_string(bytes[4]));
  }
  const auto kappa = static_cast<std::uint32_t>(get_le(bytes, 5, 2));
  const auto w = static_cast<std::uint32_t>(get_le(bytes, 7, 4));
  const std::uint64_t rows = get_le(bytes, 11, 8);
  if (kappa != 128 && kappa != 256) {
    throw ProtocolError("OKVS table: bad kappa");
  }
  if (w == 0 || w > kMaxBandWidth || rows < w) {
    throw ProtocolError("OKVS table: bad band geometry");
  }
  const std::size_t vb = kappa / 4;
  if (rows > (bytes.size() - kHeaderBytes) / vb || bytes.size() != kHeaderBytes + rows * vb) {
    throw ProtocolError("OKVS table: size does not match header");
  }
  OkvsSeed seed;
  std::copy_n(bytes.begin() + 19, 16, seed.begin());
  BlockVec data(rows, vb);
  std::copy(bytes.begin() + kHeaderBytes, bytes.end(), data.raw().begin());
  return OkvsTable(kappa, w, seed, std::move(data));
}

// ---------------------------------------------------------------------------

std::optional<OkvsTable> okvs_try_encode(const BlockVec& keys, const BlockVec& values,
                                         const OkvsParams& params, const OkvsSeed& seed,
                                         RandomSource& rng) {
  const std::uint64_t m_rows = params.rows();
  const std::size_t vb = params.value_bytes();
  const std::size_t n = keys.size();

  const BandHasher hasher(seed, params.band_width, m_rows);
  std::vector<BandRow> bands(n);
  kernels::band_map_batch(hasher, keys, bands);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return bands[a].start < bands[b].start; });

  // pivot_pattern[c] != 0 iff column c holds a pivot row whose lowest bit is c.
  std::vector<BandPattern> pivot_pattern(m_rows, 0);
  BlockVec pivot_value(m_rows, vb);
  Bytes acc(vb);

  for (std::uint32_t idx : order) {
    std::uint64_t col = bands[idx].start;
    BandPattern p = bands[idx].pattern;
    std::copy(values[idx].begin(), values[idx].end(), acc.begin());
    for (;;) {
      if (p == 0) {
        if (std::any_of(acc.begin(), acc.end(), [](std::uint8_t b) { return b != 0; })) {
          return std::nullopt;
        }
        break;  // consistent, linearly dependent row
      }
      const int tz = ctz128(p);
      col += static_cast<std::uint64_t>(tz);
      p >>= tz;
      if (pivot_pattern[col] == 0) {
        pivot_pattern[col] = p;
        std::copy(acc.begin(), acc.end(), pivot_value[col].begin());
        break;
      }
      p ^= pivot_pattern[col];
      xor_into(acc, pivot_value[col]);
    }
  }

  // Back substitution from the last column. Free columns keep their
  // uniformly random fill.
  BlockVec table(m_rows, vb);
  rng.fill(table.raw());
  for (std::uint64_t c = m_rows; c-- > 0;) {
    BandPattern p = pivot_pattern[c];
    if (p == 0) continue;
    auto dst = table[c];
    std::copy(pivot_value[c].begin(), pivot_value[c].end(), dst.begin());
    p &= p - 1;  // drop the pivot bit itself
    while (p != 0) {
      const int j = ctz128(p);
      p &= p - 1;
      xor_into(dst, table[c + static_cast<std::uint64_t>(j)]);
    }
  }
  return OkvsTable(params.kappa, params.band_width, seed, std::move(table));
}

OkvsTable okvs_encode(const BlockVec& keys, const BlockVec& values, const OkvsParams& params,
                      RandomSource& rng, int max_retries) {
  params.validate();
  if (keys.size() != params.m || values.size() != params.m) {
    throw UsageError("OKVS encode: expected " + std::to_string(params.m) + " pairs");
  }
  if ((params.m > 0 && keys.width() != params.key_bytes()) ||
      (params.m > 0 && values.width() != params.value_bytes())) {
    throw UsageError("OKVS encode: key/value width does not match kappa");
  }
  {
    std::unordered_set<BitString, BitStringHash> seen;
    seen.reserve(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (!seen.insert(keys.get(k)).second) {
        throw UsageError("OKVS encode: duplicate key " + keys.get(k).to_hex());
      }
    }
  }
  if (max_retries < 1) {
    throw UsageError("OKVS encode: max_retries must be >= 1");
  }
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    OkvsSeed seed;
    rng.fill(seed);
    if (auto table = okvs_try_encode(keys, values, params, seed, rng)) {
      return std::move(*table);
    }
  }
  throw EncodeFailure("OKVS encode failed after " + std::to_string(max_retries) + " attempts (m=" +
                      std::to_string(params.m) + ", w=" + std::to_string(params.band_width) + ")");
}

OkvsTable okvs_encode(const std::vector<std::pair<BitString, BitString>>& pairs,
                      const OkvsParams& params, RandomSource& rng, int max_retries) {
  BlockVec keys(pairs.size(), params.key_bytes());
  BlockVec values(pairs.size(), params.value_bytes());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].first.size_bytes() != params.key_bytes() ||
        pairs[k].second.size_bytes() != params.value_bytes()) {
      throw UsageError("OKVS encode: key must be kappa bits and value 2*kappa bits");
    }
    keys.set(k, pairs[k].first);
    values.set(k, pairs[k].second);
  }
  return okvs_encode(keys, values, params, rng, max_retries);
}

}  // namespace sika
