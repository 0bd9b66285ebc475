#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "sika/bitstring.hpp"
#include "sika/random.hpp"

namespace sika {

struct SecurityParams {
  std::uint32_t kappa = 128;
  std::uint32_t lambda = 40;

  std::size_t kappa_bytes() const { return kappa / 8; }
  /// Throws UsageError unless (kappa, lambda) is (128, 40) or (256, 80).
  void validate() const;
  friend bool operator==(const SecurityParams&, const SecurityParams&) = default;
};

/// Raw AES in ECB mode over whole 16-byte blocks. Key length selects
/// AES-128/192/256. Not thread-safe; copies get their own context.
class AesBlock {
 public:
  explicit AesBlock(ByteSpan key);
  AesBlock(const AesBlock& other);
  AesBlock& operator=(const AesBlock& other);
  AesBlock(AesBlock&&) noexcept;
  AesBlock& operator=(AesBlock&&) noexcept;
  ~AesBlock();

  /// in.size() == out.size(), a multiple of 16. In-place allowed.
  void encrypt(ByteSpan in, MutableByteSpan out) const;
  void decrypt(ByteSpan in, MutableByteSpan out) const;

 private:
  Bytes key_;
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

/// Blinding PRP on κ-bit blocks: AES-κ in CBC mode with a zero IV. For
/// κ = 128 this is one AES-128 call; for κ = 256 two chained AES-256 blocks.
class Prp {
 public:
  explicit Prp(const BitString& key);

  std::size_t block_bytes() const { return block_bytes_; }
  BitString forward(const BitString& block) const;
  BitString inverse(const BitString& block) const;
  /// Span form used by the batch kernels; `in` and `out` are one κ-bit block.
  void forward(ByteSpan in, MutableByteSpan out) const;
  void inverse(ByteSpan in, MutableByteSpan out) const;

 private:
  std::size_t block_bytes_;
  AesBlock aes_;
};

BitString prp_forward(const BitString& key, const BitString& block);
BitString prp_inverse(const BitString& key, const BitString& block);

/// SHA-256 of the identifier bytes truncated to κ bits.
BitString hash_id(std::string_view raw, std::uint32_t kappa);

using SymKey = std::array<std::uint8_t, 32>;

/// HKDF-SHA256(ikm = sk, info = label). Label is one of "payload", "share",
/// "psi-id".
SymKey derive_key(const BitString& sk, std::string_view label);

struct Ciphertext {
  static constexpr std::size_t kNonceBytes = 12;
  static constexpr std::size_t kTagBytes = 16;

  std::array<std::uint8_t, kNonceBytes> nonce{};
  Bytes body;
  std::array<std::uint8_t, kTagBytes> tag{};

  std::size_t serialized_size() const { return kNonceBytes + body.size() + kTagBytes; }
  /// nonce ‖ body ‖ tag.
  Bytes serialize() const;
  void serialize_to(Bytes& out) const;
  static Ciphertext parse(ByteSpan framed);

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

inline constexpr std::size_t kMaxPlaintextBytes = std::size_t{1} << 24;

/// AES-256-GCM with a random 96-bit nonce.
Ciphertext sym_encrypt(const SymKey& key, ByteSpan plaintext, RandomSource& rng);
/// Throws AuthFailure on wrong key or tampering.
Bytes sym_decrypt(const SymKey& key, const Ciphertext& ct);
std::optional<Bytes> try_sym_decrypt(const SymKey& key, const Ciphertext& ct);

Bytes sha256(ByteSpan data);

}  // namespace sika
