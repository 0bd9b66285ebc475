#include "sika/shamir.hpp"

#include <algorithm>
#include <string>

#include "sika/gf128.hpp"
#include "sika/kernels.hpp"

namespace sika {

Bytes Share::serialize() const {
  Bytes out(serialized_size());
  for (int i = 0; i < 4; ++i) {
    out[i] = static_cast<std::uint8_t>(x >> (8 * i));
  }
  std::copy_n(y.data(), y.size_bytes(), out.begin() + 4);
  return out;
}

Share Share::parse(ByteSpan bytes) {
  if (bytes.size() != 4 + 16 && bytes.size() != 4 + 32) {
    throw ProtocolError("share must be 20 or 36 bytes, got " + std::to_string(bytes.size()));
  }
  Share s;
  s.x = static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
        static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
  s.y = BitString::from_bytes(bytes.subspan(4));
  return s;
}

void ThresholdPolicy::validate() const {
  if (t == 0 || t > m || m > 0xFFFFFFFFull) {
    throw UsageError("threshold policy requires 1 <= t <= m < 2^32 (t=" + std::to_string(t) +
                     ", m=" + std::to_string(m) + ")");
  }
}

std::vector<Share> shamir_split(const BitString& secret, std::uint32_t t, std::uint64_t m,
                                RandomSource& rng) {
  ThresholdPolicy{t, m}.validate();
  if (secret.bits() != 128 && secret.bits() != 256) {
    throw UsageError("shamir_split: secret must be 128 or 256 bits");
  }
  const std::size_t components = secret.size_bytes() / 16;
  std::vector<Share> shares(m);
  for (std::uint64_t k = 0; k < m; ++k) {
    shares[k].x = static_cast<std::uint32_t>(k + 1);
    shares[k].y = BitString(secret.bits());
  }

  std::vector<Gf128> coeffs(t);
  std::vector<Gf128> values(m);
  std::uint8_t buf[16];
  for (std::size_t c = 0; c < components; ++c) {
    coeffs[0] = Gf128::from_bytes(secret.bytes().subspan(16 * c, 16));
    for (std::uint32_t d = 1; d < t; ++d) {
      rng.fill(buf);
      coeffs[d] = Gf128::from_bytes(buf);
    }
    kernels::poly_eval_points(coeffs, values);
    for (std::uint64_t k = 0; k < m; ++k) {
      values[k].to_bytes(shares[k].y.mutable_bytes().subspan(16 * c, 16));
    }
  }
  return shares;
}

BitString shamir_reconstruct(std::vector<Share> shares, std::uint32_t t) {
  if (t == 0) {
    throw UsageError("shamir_reconstruct: t must be positive");
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) { return a.x < b.x; });
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (shares[i].x == 0) {
      throw UsageError("shamir_reconstruct: share index 0 is reserved for the secret");
    }
    if (i > 0 && shares[i].x == shares[i - 1].x) {
      throw UsageError("shamir_reconstruct: duplicate share index " + std::to_string(shares[i].x));
    }
  }
  if (shares.size() < t) {
    throw InsufficientShares("need " + std::to_string(t) + " shares, have " +
                             std::to_string(shares.size()));
  }
  shares.resize(t);
  const std::size_t width = shares.front().y.size_bytes();
  if (width != 16 && width != 32) {
    throw UsageError("shamir_reconstruct: share value must be 128 or 256 bits");
  }
  for (const Share& s : shares) {
    if (s.y.size_bytes() != width) {
      throw UsageError("shamir_reconstruct: mixed share widths");
    }
  }

  // Lagrange basis at 0 in characteristic 2: L_i = prod_{j!=i} x_j / (x_j + x_i).
  std::vector<Gf128> basis(t);
  for (std::uint32_t i = 0; i < t; ++i) {
    const Gf128 xi = Gf128::from_u64(shares[i].x);
    Gf128 num = Gf128::one();
    Gf128 den = Gf128::one();
    for (std::uint32_t j = 0; j < t; ++j) {
      if (j == i) continue;
      const Gf128 xj = Gf128::from_u64(shares[j].x);
      num *= xj;
      den *= xj + xi;
    }
    basis[i] = num * den.inverse();
  }

  BitString secret(width * 8);
  for (std::size_t c = 0; c < width / 16; ++c) {
    Gf128 acc;
    for (std::uint32_t i = 0; i < t; ++i) {
      acc += basis[i] * Gf128::from_bytes(shares[i].y.bytes().subspan(16 * c, 16));
    }
    acc.to_bytes(secret.mutable_bytes().subspan(16 * c, 16));
  }
  return secret;
}

}  // namespace sika
