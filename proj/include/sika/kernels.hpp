#pragma once

// Data-parallel inner loops of the protocol. Every kernel has a serial
// reference (Exec::serial) that the tests compare against the OpenMP build
// and that bench/kernel_bench times side by side.

#include <span>
#include <vector>

#include "sika/bitstring.hpp"
#include "sika/gf128.hpp"
#include "sika/okvs.hpp"
#include "sika/primitives.hpp"

namespace sika::kernels {

enum class Exec { serial, parallel };

/// Number of worker threads the parallel kernels will use.
int max_threads();

/// out[k] = band row of keys[k].
void band_map_batch(const BandHasher& hasher, const BlockVec& keys, std::span<BandRow> out,
                    Exec exec = Exec::parallel);

/// out[k] = decode(table, keys[k]); `out` must be keys.size() x 2κ/8.
void okvs_decode_batch(const OkvsTable& table, const BlockVec& keys, BlockVec& out,
                       Exec exec = Exec::parallel);

/// Collector-side unblinding for provider `self` (0-based):
///   nyms[k] = bnyms[k] ^ XOR_{j != self} PRP(key_j, zvecs[k * n + j]).
/// `prps` holds one PRP per provider; prps[self] is unused.
void unblind_batch(std::span<const Prp> prps, std::size_t self, const BlockVec& bnyms,
                   const BlockVec& zvecs, BlockVec& nyms, Exec exec = Exec::parallel);

/// Blinded shares for one destination j:
///   out[k] = s[k] ^ PRP(key, z[k * n + j]).
void blind_shares_batch(const Prp& prp, const BlockVec& s, const BlockVec& z, std::size_t n,
                        std::size_t j, BlockVec& out, Exec exec = Exec::parallel);

/// values[k] = p(k + 1) for p(x) = sum coeffs[d] x^d over GF(2^128).
void poly_eval_points(std::span<const Gf128> coeffs, std::span<Gf128> values,
                      Exec exec = Exec::parallel);

}  // namespace sika::kernels
