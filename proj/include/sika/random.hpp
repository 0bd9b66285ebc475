#pragma once

#include <cstdint>
#include <memory>

#include "sika/bitstring.hpp"

namespace sika {

/// Source of cryptographic randomness. Every protocol operation that samples
/// takes one of these so that simulations can be replayed from a seed.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(MutableByteSpan out) = 0;

  BitString bits(std::size_t n_bits);
  std::uint64_t next_u64();
  /// Uniform integer in [0, bound); bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound);
};

/// OS-backed CSPRNG (OpenSSL RAND_bytes). Thread-safe.
class OsRandom final : public RandomSource {
 public:
  OsRandom();
  void fill(MutableByteSpan out) override;
};

/// Deterministic AES-128-CTR stream keyed from a seed. Reproducible runs
/// only; a given instance must not be shared between threads.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(ByteSpan seed);
  ~SeededRandom() override;
  SeededRandom(const SeededRandom&) = delete;
  SeededRandom& operator=(const SeededRandom&) = delete;

  void fill(MutableByteSpan out) override;

  /// Independent child stream for `label`, e.g. one per party.
  std::unique_ptr<SeededRandom> fork(std::uint64_t label) const;

 private:
  Bytes seed_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Process-wide OS generator.
OsRandom& system_random();

/// `n_bits` uniform bits from the OS generator.
BitString csprng_fill(std::size_t n_bits);

}  // namespace sika
