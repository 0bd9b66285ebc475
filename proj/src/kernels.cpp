#include "sika/kernels.hpp"

#include <algorithm>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sika::kernels {

namespace {

using index_t = std::int64_t;

void check_rows(const BlockVec& v, std::size_t count, std::size_t width, const char* what) {
  if (v.size() != count || (count > 0 && v.width() != width)) {
    throw UsageError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------

void band_map_batch(const BandHasher& hasher, const BlockVec& keys, std::span<BandRow> out, Exec exec) {
  if (out.size() != keys.size()) {
    throw UsageError("band_map_batch: output size mismatch");
  }
  if (keys.size() > 0 && keys.width() != 16 && keys.width() != 32) {
    throw UsageError("band_map_batch: key must be 128 or 256 bits");
  }
  const auto n = static_cast<index_t>(keys.size());
  if (exec == Exec::serial) {
    for (index_t k = 0; k < n; ++k) {
      out[k] = hasher.map(keys[k]);
    }
    return;
  }
#pragma omp parallel
  {
    const BandHasher local = hasher;
#pragma omp for schedule(static)
    for (index_t k = 0; k < n; ++k) {
      out[k] = local.map(keys[k]);
    }
  }
}

// ---------------------------------------------------------------------------

void okvs_decode_batch(const OkvsTable& table, const BlockVec& keys, BlockVec& out, Exec exec) {
  if (keys.size() > 0 && keys.width() != table.kappa() / 8) {
    throw UsageError("okvs_decode_batch: key length must equal kappa");
  }
  check_rows(out, keys.size(), table.value_bytes(), "okvs_decode_batch");
  const auto n = static_cast<index_t>(keys.size());
  const BandHasher hasher = table.hasher();
  if (exec == Exec::serial) {
    for (index_t k = 0; k < n; ++k) {
      table.decode_row(hasher.map(keys[k]), out[k]);
    }
    return;
  }
#pragma omp parallel
  {
    const BandHasher local = hasher;
#pragma omp for schedule(static)
    for (index_t k = 0; k < n; ++k) {
      table.decode_row(local.map(keys[k]), out[k]);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

void unblind_range(std::span<const Prp> prps, std::size_t self, const BlockVec& bnyms,
                   const BlockVec& zvecs, BlockVec& nyms, index_t begin, index_t end) {
  const std::size_t n = prps.size();
  std::uint8_t pad[32];
  for (index_t k = begin; k < end; ++k) {
    auto dst = nyms[k];
    std::copy(bnyms[k].begin(), bnyms[k].end(), dst.begin());
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) continue;
      MutableByteSpan p(pad, dst.size());
      prps[j].forward(zvecs[static_cast<std::size_t>(k) * n + j], p);
      xor_into(dst, p);
    }
  }
}

}  // namespace

void unblind_batch(std::span<const Prp> prps, std::size_t self, const BlockVec& bnyms,
                   const BlockVec& zvecs, BlockVec& nyms, Exec exec) {
  const std::size_t n = prps.size();
  const std::size_t m = bnyms.size();
  if (self >= n || zvecs.size() != m * n || (m > 0 && zvecs.width() != bnyms.width())) {
    throw UsageError("unblind_batch: shape mismatch");
  }
  check_rows(nyms, m, bnyms.width(), "unblind_batch");
  if (exec == Exec::serial) {
    unblind_range(prps, self, bnyms, zvecs, nyms, 0, static_cast<index_t>(m));
    return;
  }
#pragma omp parallel
  {
    // PRP contexts are per-thread.
    const std::vector<Prp> local(prps.begin(), prps.end());
#ifdef _OPENMP
    const index_t threads = omp_get_num_threads();
    const index_t tid = omp_get_thread_num();
#else
    const index_t threads = 1;
    const index_t tid = 0;
#endif
    const index_t chunk = (static_cast<index_t>(m) + threads - 1) / threads;
    const index_t begin = std::min<index_t>(tid * chunk, static_cast<index_t>(m));
    const index_t end = std::min<index_t>(begin + chunk, static_cast<index_t>(m));
    unblind_range(local, self, bnyms, zvecs, nyms, begin, end);
  }
}

// ---------------------------------------------------------------------------

void blind_shares_batch(const Prp& prp, const BlockVec& s, const BlockVec& z, std::size_t n,
                        std::size_t j, BlockVec& out, Exec exec) {
  const std::size_t m = s.size();
  if (j >= n || z.size() != m * n) {
    throw UsageError("blind_shares_batch: shape mismatch");
  }
  check_rows(out, m, s.width(), "blind_shares_batch");
  const auto count = static_cast<index_t>(m);
  if (exec == Exec::serial) {
    for (index_t k = 0; k < count; ++k) {
      prp.forward(z[static_cast<std::size_t>(k) * n + j], out[k]);
      xor_into(out[k], s[k]);
    }
    return;
  }
#pragma omp parallel
  {
    const Prp local = prp;
#pragma omp for schedule(static)
    for (index_t k = 0; k < count; ++k) {
      local.forward(z[static_cast<std::size_t>(k) * n + j], out[k]);
      xor_into(out[k], s[k]);
    }
  }
}

// ---------------------------------------------------------------------------

void poly_eval_points(std::span<const Gf128> coeffs, std::span<Gf128> values, Exec exec) {
  const auto m = static_cast<index_t>(values.size());
  auto horner = [&](index_t k) {
    const Gf128 x = Gf128::from_u64(static_cast<std::uint64_t>(k) + 1);
    Gf128 acc;
    for (std::size_t d = coeffs.size(); d-- > 0;) {
      acc = acc * x + coeffs[d];
    }
    values[k] = acc;
  };
  if (exec == Exec::serial) {
    for (index_t k = 0; k < m; ++k) horner(k);
    return;
  }
#pragma omp parallel for schedule(static)
  for (index_t k = 0; k < m; ++k) horner(k);
}

}  // namespace sika::kernels
