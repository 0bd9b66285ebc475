#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "sika/okvs.hpp"

using namespace sika;

namespace {

BlockVec random_blocks(std::size_t count, std::size_t width, RandomSource& rng) {
  BlockVec v(count, width);
  rng.fill(v.raw());
  return v;
}

OkvsParams params_for(std::uint64_t m, std::uint32_t kappa = 128) {
  return OkvsParams::for_pairs(m, kappa == 128 ? SecurityParams{128, 40} : SecurityParams{256, 80});
}

OkvsSeed random_seed(RandomSource& rng) {
  OkvsSeed s;
  rng.fill(s);
  return s;
}

double byte_chi_square(const std::array<std::uint64_t, 256>& hist) {
  std::uint64_t total = 0;
  for (auto c : hist) total += c;
  const double expected = static_cast<double>(total) / 256.0;
  double chi = 0;
  for (auto c : hist) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

}  // namespace

TEST(OkvsParams, Geometry) {
  const OkvsParams p = params_for(1024);
  EXPECT_EQ(p.band_width, 40u + 10u + 8u);
  EXPECT_EQ(p.rows(), static_cast<std::uint64_t>(std::ceil(1.12 * 1024)) + p.band_width);
  EXPECT_EQ(params_for(1 << 12).band_width, 60u);
  EXPECT_EQ(params_for(1, 256).band_width, 88u);
  EXPECT_EQ(params_for(1, 256).value_bytes(), 64u);
  EXPECT_LE(params_for(std::uint64_t{1} << 40, 256).band_width, kMaxBandWidth);
}

TEST(OkvsEncode, RoundTripAcrossSizes) {
  auto& rng = system_random();
  for (std::uint32_t kappa : {128u, 256u}) {
    for (std::uint64_t m : {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{256}, std::uint64_t{4096}}) {
      const OkvsParams p = params_for(m, kappa);
      const BlockVec keys = random_blocks(m, p.key_bytes(), rng);
      const BlockVec vals = random_blocks(m, p.value_bytes(), rng);
      const OkvsTable table = okvs_encode(keys, vals, p, rng);
      EXPECT_EQ(table.rows(), p.rows());
      for (std::size_t k = 0; k < m; ++k) {
        ASSERT_EQ(table.decode(keys.get(k)), vals.get(k)) << "m=" << m << " k=" << k;
      }
    }
  }
}

TEST(OkvsEncode, EmptySetDecodesAreRandom) {
  auto& rng = system_random();
  const OkvsParams p = params_for(0);
  const OkvsTable table = okvs_encode(BlockVec(0, 16), BlockVec(0, 32), p, rng);
  EXPECT_EQ(table.rows(), p.rows());
  EXPECT_FALSE(table.decode(csprng_fill(128)).is_zero());
}

TEST(OkvsEncode, DuplicateKeysAndMismatchRejected) {
  auto& rng = system_random();
  const OkvsParams p = params_for(3);
  BlockVec keys = random_blocks(3, 16, rng);
  keys.set(2, keys.get(0));
  EXPECT_THROW(okvs_encode(keys, random_blocks(3, 32, rng), p, rng), UsageError);
  EXPECT_THROW(okvs_encode(random_blocks(3, 16, rng), random_blocks(2, 32, rng), p, rng), UsageError);
}

TEST(OkvsEncode, PairOverloadMatchesDecode) {
  auto& rng = system_random();
  std::vector<std::pair<BitString, BitString>> pairs;
  for (int i = 0; i < 50; ++i) pairs.emplace_back(csprng_fill(128), csprng_fill(256));
  const OkvsTable table = okvs_encode(pairs, params_for(50), rng);
  for (const auto& [k, v] : pairs) EXPECT_EQ(okvs_decode(table, k), v);
}

TEST(BandMap, DeterministicAndLeadingBitSet) {
  auto& rng = system_random();
  const OkvsParams p = params_for(1000);
  const OkvsSeed seed = random_seed(rng);
  for (int i = 0; i < 1000; ++i) {
    const BitString key = csprng_fill(128);
    const BandRow a = band_map(seed, key, p);
    EXPECT_EQ(a, band_map(seed, key, p));
    EXPECT_EQ(a.pattern & 1, 1u);
    EXPECT_LE(a.start + p.band_width, p.rows());
    EXPECT_EQ(a.pattern >> p.band_width, 0u);
  }
  OkvsSeed other = seed;
  other[0] ^= 1;
  const BitString key = csprng_fill(128);
  EXPECT_NE(band_map(seed, key, p), band_map(other, key, p));
}

TEST(BandMap, StartPositionsUniform) {
  auto& rng = system_random();
  const OkvsParams p = params_for(1000);
  const OkvsSeed seed = random_seed(rng);
  const std::uint64_t range = p.rows() - p.band_width + 1;
  std::array<double, 16> buckets{};
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    const BandRow r = band_map(seed, csprng_fill(128), p);
    buckets[r.start * 16 / range] += 1;
  }
  double chi = 0;
  // Bucket widths differ by at most one position; use exact expectations.
  for (int b = 0; b < 16; ++b) {
    const std::uint64_t lo = (b * range + 15) / 16, hi = ((b + 1) * range + 15) / 16;
    const double expected = trials * static_cast<double>(hi - lo) / range;
    chi += (buckets[b] - expected) * (buckets[b] - expected) / expected;
  }
  // 15 degrees of freedom, mean + 4 sd.
  EXPECT_LT(chi, 15 + 4 * std::sqrt(30.0));
}

TEST(OkvsDecode, AbsentKeysLookUniform) {
  auto& rng = system_random();
  const std::uint64_t m = 1 << 10;
  const OkvsParams p = params_for(m);
  const OkvsTable table = okvs_encode(random_blocks(m, 16, rng), random_blocks(m, 32, rng), p, rng);
  std::array<std::uint64_t, 256> hist{};
  std::uint64_t ones = 0, bits = 0;
  for (int i = 0; i < 10000; ++i) {
    const BitString v = table.decode(csprng_fill(128));
    for (auto b : v.bytes()) {
      ++hist[b];
      ones += static_cast<std::uint64_t>(__builtin_popcount(b));
      bits += 8;
    }
  }
  EXPECT_LT(std::abs(static_cast<double>(ones) - bits / 2.0), 4 * std::sqrt(bits / 4.0));
  EXPECT_LT(byte_chi_square(hist), 255 + 4 * std::sqrt(510.0));
}

TEST(OkvsDecode, TablesFromDisjointSetsIndistinguishable) {
  auto& rng = system_random();
  const std::uint64_t m = 1 << 10;
  const OkvsParams p = params_for(m);
  std::array<std::uint64_t, 256> h1{}, h2{};
  for (auto* h : {&h1, &h2}) {
    const OkvsTable t = okvs_encode(random_blocks(m, 16, rng), random_blocks(m, 32, rng), p, rng);
    for (auto b : t.row_data().raw()) ++(*h)[b];
  }
  double chi = 0;
  for (int b = 0; b < 256; ++b) {
    const double s = static_cast<double>(h1[b] + h2[b]);
    if (s > 0) chi += (static_cast<double>(h1[b]) - h2[b]) * (static_cast<double>(h1[b]) - h2[b]) / s;
  }
  // chi-square(255) upper 1% point.
  EXPECT_LT(chi, 310.457);
}

TEST(OkvsEncode, FirstAttemptSuccessRate) {
  auto& rng = system_random();
  const std::uint64_t m = 1 << 12;
  const OkvsParams p = params_for(m);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const BlockVec keys = random_blocks(m, 16, rng), vals = random_blocks(m, 32, rng);
    if (auto t = okvs_try_encode(keys, vals, p, random_seed(rng), rng)) {
      ++ok;
      for (std::size_t k = 0; k < m; k += 97) ASSERT_EQ(t->decode(keys.get(k)), vals.get(k));
    }
  }
  EXPECT_GE(ok, 98);
}

TEST(OkvsSerialize, RoundTripAndLayout) {
  auto& rng = system_random();
  const OkvsParams p = params_for(100);
  const OkvsTable t = okvs_encode(random_blocks(100, 16, rng), random_blocks(100, 32, rng), p, rng);
  const Bytes wire = t.serialize();
  EXPECT_EQ(wire.size(), 35 + p.rows() * 32);
  EXPECT_EQ(std::string(wire.begin(), wire.begin() + 4), "OKVS");
  EXPECT_EQ(wire[4], 1);
  EXPECT_EQ(wire[5] | (wire[6] << 8), 128);
  EXPECT_EQ(OkvsTable::parse(wire), t);
}

TEST(OkvsSerialize, MalformedInputRejected) {
  auto& rng = system_random();
  const OkvsParams p = params_for(10);
  const Bytes wire = okvs_encode(random_blocks(10, 16, rng), random_blocks(10, 32, rng), p, rng).serialize();
  Bytes bad = wire;
  bad[0] = 'X';
  EXPECT_THROW(OkvsTable::parse(bad), ProtocolError);
  bad = wire;
  bad[4] = 2;
  EXPECT_THROW(OkvsTable::parse(bad), ProtocolError);
  bad = wire;
  bad[5] = 64;
  EXPECT_THROW(OkvsTable::parse(bad), ProtocolError);
  bad = wire;
  bad.pop_back();
  EXPECT_THROW(OkvsTable::parse(bad), ProtocolError);
  EXPECT_THROW(OkvsTable::parse(ByteSpan(wire.data(), 20)), ProtocolError);
}
