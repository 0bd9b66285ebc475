#include "sika/gf128.hpp"

#include <array>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define SIKA_HAVE_PCLMUL_PATH 1
#endif

namespace sika {

namespace {

struct U128 {
  std::uint64_t hi;
  std::uint64_t lo;
};

U128 clmul64_portable(std::uint64_t a, std::uint64_t b) {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t mask = 0 - ((b >> i) & 1);
    lo ^= (a << i) & mask;
    if (i != 0) {
      hi ^= (a >> (64 - i)) & mask;
    }
  }
  return {hi, lo};
}

#ifdef SIKA_HAVE_PCLMUL_PATH
__attribute__((target("pclmul,sse4.1"))) U128 clmul64_hw(std::uint64_t a, std::uint64_t b) {
  const __m128i va = _mm_set_epi64x(0, static_cast<long long>(a));
  const __m128i vb = _mm_set_epi64x(0, static_cast<long long>(b));
  const __m128i r = _mm_clmulepi64_si128(va, vb, 0x00);
  return {static_cast<std::uint64_t>(_mm_extract_epi64(r, 1)),
          static_cast<std::uint64_t>(_mm_cvtsi128_si64(r))};
}

bool cpu_has_pclmul() {
  static const bool has = __builtin_cpu_supports("pclmul") && __builtin_cpu_supports("sse4.1");
  return has;
}
#endif

U128 clmul64(std::uint64_t a, std::uint64_t b) {
#ifdef SIKA_HAVE_PCLMUL_PATH
  if (cpu_has_pclmul()) {
    return clmul64_hw(a, b);
  }
#endif
  return clmul64_portable(a, b);
}

constexpr std::uint64_t kReduction = 0x87;  // x^7 + x^2 + x + 1

}  // namespace

Gf128 operator*(Gf128 a, Gf128 b) {
  const U128 ll = clmul64(a.lo, b.lo);
  const U128 hh = clmul64(a.hi, b.hi);
  const U128 lh = clmul64(a.lo, b.hi);
  const U128 hl = clmul64(a.hi, b.lo);
  // 256-bit product p3:p2:p1:p0
  std::uint64_t p0 = ll.lo;
  std::uint64_t p1 = ll.hi ^ lh.lo ^ hl.lo;
  std::uint64_t p2 = hh.lo ^ lh.hi ^ hl.hi;
  const std::uint64_t p3 = hh.hi;
  // x^128 = 0x87: fold p3 (at x^192) then p2 (at x^128).
  const U128 f3 = clmul64(p3, kReduction);
  p1 ^= f3.lo;
  p2 ^= f3.hi;
  const U128 f2 = clmul64(p2, kReduction);
  p0 ^= f2.lo;
  p1 ^= f2.hi;
  return {p1, p0};
}

Gf128 Gf128::inverse() const {
  if (is_zero()) {
    throw UsageError("GF(2^128): zero has no inverse");
  }
  // a^(2^128 - 2) = (a^(2^127 - 1))^2
  Gf128 acc = *this;
  for (int i = 1; i < 127; ++i) {
    acc = acc * acc * *this;
  }
  return acc * acc;
}

Gf128 Gf128::from_bytes(ByteSpan be16) {
  if (be16.size() != 16) {
    throw UsageError("GF(2^128) element needs 16 bytes");
  }
  Gf128 out;
  for (int i = 0; i < 8; ++i) {
    out.hi = (out.hi << 8) | be16[i];
    out.lo = (out.lo << 8) | be16[8 + i];
  }
  return out;
}

void Gf128::to_bytes(MutableByteSpan be16) const {
  if (be16.size() != 16) {
    throw UsageError("GF(2^128) element needs 16 bytes");
  }
  for (int i = 0; i < 8; ++i) {
    be16[7 - i] = static_cast<std::uint8_t>(hi >> (8 * i));
    be16[15 - i] = static_cast<std::uint8_t>(lo >> (8 * i));
  }
}

}  // namespace sika
