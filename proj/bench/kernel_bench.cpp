// Serial reference vs OpenMP build of each kernel. The second argument of
// every benchmark selects the execution mode: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

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

Exec exec_of(const benchmark::State& st) { return st.range(1) == 0 ? Exec::serial : Exec::parallel; }

void BM_BandMap(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const OkvsParams p = OkvsParams::for_pairs(m, SecurityParams{});
  OkvsSeed seed;
  system_random().fill(seed);
  const BandHasher hasher(seed, p.band_width, p.rows());
  const BlockVec keys = random_blocks(m, p.key_bytes());
  std::vector<BandRow> out(m);
  for (auto _ : st) {
    kernels::band_map_batch(hasher, keys, out, exec_of(st));
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(m));
}

void BM_OkvsDecode(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const OkvsParams p = OkvsParams::for_pairs(m, SecurityParams{});
  const BlockVec keys = random_blocks(m, p.key_bytes());
  const BlockVec vals = random_blocks(m, p.value_bytes());
  const OkvsTable t = okvs_encode(keys, vals, p, system_random());
  BlockVec out(m, p.value_bytes());
  for (auto _ : st) {
    kernels::okvs_decode_batch(t, keys, out, exec_of(st));
    benchmark::DoNotOptimize(out.raw().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(m));
}

void BM_Unblind(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const std::size_t n = 3;
  std::vector<Prp> prps;
  for (std::size_t j = 0; j < n; ++j) prps.emplace_back(csprng_fill(128));
  const BlockVec bnyms = random_blocks(m, 16), zvecs = random_blocks(m * n, 16);
  BlockVec out(m, 16);
  for (auto _ : st) {
    kernels::unblind_batch(prps, 0, bnyms, zvecs, out, exec_of(st));
    benchmark::DoNotOptimize(out.raw().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(m));
}

void BM_BlindShares(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const std::size_t n = 3;
  const Prp prp(csprng_fill(128));
  const BlockVec s = random_blocks(m, 16), z = random_blocks(m * n, 16);
  BlockVec out(m, 16);
  for (auto _ : st) {
    kernels::blind_shares_batch(prp, s, z, n, 1, out, exec_of(st));
    benchmark::DoNotOptimize(out.raw().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(m));
}

void BM_PolyEval(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  std::vector<Gf128> coeffs(64);
  for (auto& c : coeffs) c = {system_random().next_u64(), system_random().next_u64()};
  std::vector<Gf128> values(m);
  for (auto _ : st) {
    kernels::poly_eval_points(coeffs, values, exec_of(st));
    benchmark::DoNotOptimize(values.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(m));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (std::int64_t m : {1 << 12, 1 << 16})
    for (std::int64_t e : {0, 1}) b->Args({m, e});
  b->ArgNames({"m", "parallel"});
}

}  // namespace

BENCHMARK(BM_BandMap)->Apply(sizes);
BENCHMARK(BM_OkvsDecode)->Apply(sizes);
BENCHMARK(BM_Unblind)->Apply(sizes);
BENCHMARK(BM_BlindShares)->Apply(sizes);
BENCHMARK(BM_PolyEval)->Apply(sizes);

BENCHMARK_MAIN();
