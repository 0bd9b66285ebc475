#include "sika/primitives.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/params.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace sika {

void SecurityParams::validate() const {
  if (!((kappa == 128 && lambda == 40) || (kappa == 256 && lambda == 80))) {
    throw UsageError("security parameters must be (kappa, lambda) = (128, 40) or (256, 80), got (" +
                     std::to_string(kappa) + ", " + std::to_string(lambda) + ")");
  }
}

// ---------------------------------------------------------------------------
// AES

struct AesBlock::Ctx {
  EVP_CIPHER_CTX* enc = nullptr;
  EVP_CIPHER_CTX* dec = nullptr;
  ~Ctx() {
    EVP_CIPHER_CTX_free(enc);
    EVP_CIPHER_CTX_free(dec);
  }
};

namespace {

const EVP_CIPHER* ecb_for(std::size_t key_bytes) {
  switch (key_bytes) {
    case 16: return EVP_aes_128_ecb();
    case 24: return EVP_aes_192_ecb();
    case 32: return EVP_aes_256_ecb();
    default: throw UsageError("AES key must be 16, 24 or 32 bytes");
  }
}

}  // namespace

AesBlock::AesBlock(ByteSpan key) : key_(key.begin(), key.end()), ctx_(new Ctx) {
  const EVP_CIPHER* cipher = ecb_for(key_.size());
  ctx_->enc = EVP_CIPHER_CTX_new();
  ctx_->dec = EVP_CIPHER_CTX_new();
  if (ctx_->enc == nullptr || ctx_->dec == nullptr ||
      EVP_EncryptInit_ex(ctx_->enc, cipher, nullptr, key_.data(), nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx_->dec, cipher, nullptr, key_.data(), nullptr) != 1) {
    throw std::runtime_error("AES context init failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx_->enc, 0);
  EVP_CIPHER_CTX_set_padding(ctx_->dec, 0);
}

AesBlock::AesBlock(const AesBlock& other) : AesBlock(ByteSpan(other.key_)) {}

AesBlock& AesBlock::operator=(const AesBlock& other) {
  if (this != &other) {
    *this = AesBlock(other);
  }
  return *this;
}

AesBlock::AesBlock(AesBlock&&) noexcept = default;
AesBlock& AesBlock::operator=(AesBlock&&) noexcept = default;
AesBlock::~AesBlock() = default;

void AesBlock::encrypt(ByteSpan in, MutableByteSpan out) const {
  if (in.size() != out.size() || in.size() % 16 != 0) {
    throw UsageError("AES: input must be whole blocks");
  }
  int len = 0;
  if (EVP_EncryptUpdate(ctx_->enc, out.data(), &len, in.data(), static_cast<int>(in.size())) != 1) {
    throw std::runtime_error("AES encrypt failed");
  }
}

void AesBlock::decrypt(ByteSpan in, MutableByteSpan out) const {
  if (in.size() != out.size() || in.size() % 16 != 0) {
    throw UsageError("AES: input must be whole blocks");
  }
  int len = 0;
  if (EVP_DecryptUpdate(ctx_->dec, out.data(), &len, in.data(), static_cast<int>(in.size())) != 1) {
    throw std::runtime_error("AES decrypt failed");
  }
}

// ---------------------------------------------------------------------------
// PRP

namespace {

std::size_t checked_prp_width(const BitString& key) {
  if (key.bits() != 128 && key.bits() != 256) {
    throw UsageError("PRP key must be 128 or 256 bits");
  }
  return key.size_bytes();
}

}  // namespace

Prp::Prp(const BitString& key) : block_bytes_(checked_prp_width(key)), aes_(key.bytes()) {}

void Prp::forward(ByteSpan in, MutableByteSpan out) const {
  if (in.size() != block_bytes_ || out.size() != block_bytes_) {
    throw UsageError("PRP: block length must equal kappa");
  }
  if (block_bytes_ == 16) {
    aes_.encrypt(in, out);
    return;
  }
  // CBC, zero IV: c1 = E(b1), c2 = E(b2 ^ c1).
  std::uint8_t tmp[16];
  aes_.encrypt(in.first(16), out.first(16));
  for (int i = 0; i < 16; ++i) tmp[i] = in[16 + i] ^ out[i];
  aes_.encrypt(tmp, out.subspan(16, 16));
}

void Prp::inverse(ByteSpan in, MutableByteSpan out) const {
  if (in.size() != block_bytes_ || out.size() != block_bytes_) {
    throw UsageError("PRP: block length must equal kappa");
  }
  if (block_bytes_ == 16) {
    aes_.decrypt(in, out);
    return;
  }
  std::uint8_t c1[16];
  std::memcpy(c1, in.data(), 16);
  std::uint8_t tmp[16];
  aes_.decrypt(in.subspan(16, 16), tmp);
  for (int i = 0; i < 16; ++i) out[16 + i] = tmp[i] ^ c1[i];
  aes_.decrypt(ByteSpan(c1, 16), out.first(16));
}

BitString Prp::forward(const BitString& block) const {
  BitString out(block_bytes_ * 8);
  forward(block.bytes(), out.mutable_bytes());
  return out;
}

BitString Prp::inverse(const BitString& block) const {
  BitString out(block_bytes_ * 8);
  inverse(block.bytes(), out.mutable_bytes());
  return out;
}

BitString prp_forward(const BitString& key, const BitString& block) { return Prp(key).forward(block); }
BitString prp_inverse(const BitString& key, const BitString& block) { return Prp(key).inverse(block); }

// ---------------------------------------------------------------------------
// Hashing and key derivation

Bytes sha256(ByteSpan data) {
  Bytes out(32);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  return out;
}

BitString hash_id(std::string_view raw, std::uint32_t kappa) {
  if (raw.empty()) {
    throw UsageError("hash_id: empty identifier");
  }
  if (kappa != 128 && kappa != 256) {
    throw UsageError("hash_id: kappa must be 128 or 256");
  }
  const Bytes digest = sha256(ByteSpan(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  return BitString::from_bytes(ByteSpan(digest).first(kappa / 8));
}

namespace {

EVP_KDF* hkdf_algorithm() {
  static EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "HKDF", nullptr);
  if (kdf == nullptr) {
    throw std::runtime_error("HKDF unavailable");
  }
  return kdf;
}

}  // namespace

SymKey derive_key(const BitString& sk, std::string_view label) {
  if (label != "payload" && label != "share" && label != "psi-id") {
    throw UsageError("derive_key: unknown label '" + std::string(label) + "'");
  }
  std::string info = "sika/";
  info += label;
  Bytes ikm(sk.bytes().begin(), sk.bytes().end());

  EVP_KDF_CTX* kctx = EVP_KDF_CTX_new(hkdf_algorithm());
  if (kctx == nullptr) {
    throw std::runtime_error("HKDF context allocation failed");
  }
  char digest[] = "SHA256";
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, ikm.data(), ikm.size()),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO, info.data(), info.size()),
      OSSL_PARAM_construct_end(),
  };
  SymKey out{};
  const int rc = EVP_KDF_derive(kctx, out.data(), out.size(), params);
  EVP_KDF_CTX_free(kctx);
  if (rc != 1) {
    throw std::runtime_error("HKDF derive failed");
  }
  return out;
}

// ---------------------------------------------------------------------------
// AEAD

Bytes Ciphertext::serialize() const {
  Bytes out;
  serialize_to(out);
  return out;
}

void Ciphertext::serialize_to(Bytes& out) const {
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), body.begin(), body.end());
  out.insert(out.end(), tag.begin(), tag.end());
}

Ciphertext Ciphertext::parse(ByteSpan framed) {
  if (framed.size() < kNonceBytes + kTagBytes) {
    throw ProtocolError("ciphertext shorter than nonce and tag");
  }
  Ciphertext ct;
  std::copy_n(framed.begin(), kNonceBytes, ct.nonce.begin());
  ct.body.assign(framed.begin() + kNonceBytes, framed.end() - kTagBytes);
  std::copy(framed.end() - kTagBytes, framed.end(), ct.tag.begin());
  return ct;
}

namespace {

struct CipherCtx {
  EVP_CIPHER_CTX* p = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(p); }
};

}  // namespace

Ciphertext sym_encrypt(const SymKey& key, ByteSpan plaintext, RandomSource& rng) {
  if (plaintext.size() > kMaxPlaintextBytes) {
    throw UsageError("sym_encrypt: plaintext exceeds 2^24 bytes");
  }
  Ciphertext ct;
  rng.fill(ct.nonce);
  ct.body.resize(plaintext.size());
  CipherCtx ctx;
  int len = 0;
  bool ok = ctx.p != nullptr &&
            EVP_EncryptInit_ex(ctx.p, EVP_aes_256_gcm(), nullptr, key.data(), ct.nonce.data()) == 1;
  if (ok && !plaintext.empty()) {
    ok = EVP_EncryptUpdate(ctx.p, ct.body.data(), &len, plaintext.data(),
                           static_cast<int>(plaintext.size())) == 1;
  }
  ok = ok && EVP_EncryptFinal_ex(ctx.p, nullptr, &len) == 1 &&
       EVP_CIPHER_CTX_ctrl(ctx.p, EVP_CTRL_GCM_GET_TAG, Ciphertext::kTagBytes, ct.tag.data()) == 1;
  if (!ok) {
    throw std::runtime_error("AES-GCM encryption failed");
  }
  return ct;
}

std::optional<Bytes> try_sym_decrypt(const SymKey& key, const Ciphertext& ct) {
  Bytes out(ct.body.size());
  CipherCtx ctx;
  int len = 0;
  if (ctx.p == nullptr ||
      EVP_DecryptInit_ex(ctx.p, EVP_aes_256_gcm(), nullptr, key.data(), ct.nonce.data()) != 1) {
    throw std::runtime_error("AES-GCM init failed");
  }
  if (!ct.body.empty() &&
      EVP_DecryptUpdate(ctx.p, out.data(), &len, ct.body.data(), static_cast<int>(ct.body.size())) != 1) {
    return std::nullopt;
  }
  auto tag = ct.tag;
  if (EVP_CIPHER_CTX_ctrl(ctx.p, EVP_CTRL_GCM_SET_TAG, Ciphertext::kTagBytes, tag.data()) != 1) {
    throw std::runtime_error("AES-GCM set tag failed");
  }
  if (EVP_DecryptFinal_ex(ctx.p, nullptr, &len) != 1) {
    return std::nullopt;
  }
  return out;
}

Bytes sym_decrypt(const SymKey& key, const Ciphertext& ct) {
  auto out = try_sym_decrypt(key, ct);
  if (!out) {
    throw AuthFailure();
  }
  return std::move(*out);
}

}  // namespace sika
