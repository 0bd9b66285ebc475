#include <gtest/gtest.h>

#include <vector>

#include "sika/kernels.hpp"

using namespace sika;
using kernels::Exec;

namespace {

BlockVec random_blocks(std::size_t count, std::size_t width) {
  BlockVec v(count, width);
  system_random().fill(v.raw());
  return v;
}

}  // namespace

TEST(Kernels, ThreadCountPositive) { EXPECT_GE(kernels::max_threads(), 1); }

TEST(Kernels, BandMapParallelMatchesSerial) {
  const OkvsParams p = OkvsParams::for_pairs(5000, SecurityParams{});
  OkvsSeed seed;
  system_random().fill(seed);
  const BandHasher hasher(seed, p.band_width, p.rows());
  const BlockVec keys = random_blocks(5000, 16);
  std::vector<BandRow> a(5000), b(5000);
  kernels::band_map_batch(hasher, keys, a, Exec::serial);
  kernels::band_map_batch(hasher, keys, b, Exec::parallel);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[17], band_map(seed, keys.get(17), p));
}

TEST(Kernels, DecodeParallelMatchesSerial) {
  for (std::uint32_t kappa : {128u, 256u}) {
    const SecurityParams sp = kappa == 128 ? SecurityParams{128, 40} : SecurityParams{256, 80};
    const OkvsParams p = OkvsParams::for_pairs(1000, sp);
    const BlockVec keys = random_blocks(1000, p.key_bytes());
    const BlockVec vals = random_blocks(1000, p.value_bytes());
    const OkvsTable t = okvs_encode(keys, vals, p, system_random());
    BlockVec a(1000, p.value_bytes()), b(1000, p.value_bytes());
    kernels::okvs_decode_batch(t, keys, a, Exec::serial);
    kernels::okvs_decode_batch(t, keys, b, Exec::parallel);
    EXPECT_EQ(a, vals);
    EXPECT_EQ(b, vals);
  }
}

TEST(Kernels, UnblindParallelMatchesSerialAndScalar) {
  const std::size_t n = 4, m = 700;
  std::vector<Prp> prps;
  for (std::size_t j = 0; j < n; ++j) prps.emplace_back(csprng_fill(128));
  const BlockVec bnyms = random_blocks(m, 16), zvecs = random_blocks(m * n, 16);
  for (std::size_t self = 0; self < n; ++self) {
    BlockVec a(m, 16), b(m, 16);
    kernels::unblind_batch(prps, self, bnyms, zvecs, a, Exec::serial);
    kernels::unblind_batch(prps, self, bnyms, zvecs, b, Exec::parallel);
    EXPECT_EQ(a, b);
    BitString expect = bnyms.get(5);
    for (std::size_t j = 0; j < n; ++j)
      if (j != self) expect ^= prps[j].forward(zvecs.get(5 * n + j));
    EXPECT_EQ(a.get(5), expect);
  }
}

TEST(Kernels, BlindSharesParallelMatchesSerial) {
  const std::size_t n = 3, m = 900;
  const Prp prp(csprng_fill(256));
  const BlockVec s = random_blocks(m, 32), z = random_blocks(m * n, 32);
  for (std::size_t j = 0; j < n; ++j) {
    BlockVec a(m, 32), b(m, 32);
    kernels::blind_shares_batch(prp, s, z, n, j, a, Exec::serial);
    kernels::blind_shares_batch(prp, s, z, n, j, b, Exec::parallel);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.get(3), s.get(3) ^ prp.forward(z.get(3 * n + j)));
  }
}

TEST(Kernels, PolyEvalParallelMatchesSerialAndHorner) {
  std::vector<Gf128> coeffs(20);
  for (auto& c : coeffs) c = {system_random().next_u64(), system_random().next_u64()};
  std::vector<Gf128> a(3000), b(3000);
  kernels::poly_eval_points(coeffs, a, Exec::serial);
  kernels::poly_eval_points(coeffs, b, Exec::parallel);
  EXPECT_EQ(a, b);
  // direct power-sum at x = 7
  Gf128 x = Gf128::from_u64(7), xp = Gf128::one(), sum = Gf128::zero();
  for (const auto& c : coeffs) {
    sum += c * xp;
    xp *= x;
  }
  EXPECT_EQ(a[6], sum);
}
