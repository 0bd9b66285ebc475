#include "sika/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <limits>
#include <stdexcept>

#include "sika/primitives.hpp"

namespace sika {

BitString RandomSource::bits(std::size_t n_bits) {
  BitString out(n_bits);
  fill(out.mutable_bytes());
  return out;
}

std::uint64_t RandomSource::next_u64() {
  std::uint8_t buf[8];
  fill(buf);
  std::uint64_t v;
  std::memcpy(&v, buf, 8);
  return v;
}

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
  if (bound == 0) {
    throw UsageError("uniform_below: bound must be positive");
  }
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) {
      return v % bound;
    }
  }
}

OsRandom::OsRandom() {
  if (RAND_status() != 1) {
    throw std::runtime_error("CSPRNG: entropy source unavailable");
  }
}

void OsRandom::fill(MutableByteSpan out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("CSPRNG: RAND_bytes failed");
  }
}

struct SeededRandom::Impl {
  EVP_CIPHER_CTX* ctx = nullptr;
  ~Impl() { EVP_CIPHER_CTX_free(ctx); }
};

SeededRandom::SeededRandom(ByteSpan seed) : seed_(seed.begin(), seed.end()), impl_(new Impl) {
  const Bytes key = sha256(seed);
  const std::uint8_t iv[16] = {};
  impl_->ctx = EVP_CIPHER_CTX_new();
  if (impl_->ctx == nullptr ||
      EVP_EncryptInit_ex(impl_->ctx, EVP_aes_128_ctr(), nullptr, key.data(), iv) != 1) {
    throw std::runtime_error("SeededRandom: cipher init failed");
  }
}

SeededRandom::~SeededRandom() = default;

void SeededRandom::fill(MutableByteSpan out) {
  if (out.empty()) return;
  std::memset(out.data(), 0, out.size());
  int len = 0;
  if (EVP_EncryptUpdate(impl_->ctx, out.data(), &len, out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("SeededRandom: keystream failed");
  }
}

std::unique_ptr<SeededRandom> SeededRandom::fork(std::uint64_t label) const {
  Bytes child = seed_;
  for (int i = 0; i < 8; ++i) {
    child.push_back(static_cast<std::uint8_t>(label >> (8 * i)));
  }
  child.push_back(0xF0);
  return std::make_unique<SeededRandom>(child);
}

OsRandom& system_random() {
  static OsRandom instance;
  return instance;
}

BitString csprng_fill(std::size_t n_bits) { return system_random().bits(n_bits); }

}  // namespace sika
