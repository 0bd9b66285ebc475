#include "sika/bitstring.hpp"

#include <algorithm>
#include <cstring>

namespace sika {

BitString::BitString(std::size_t bits) {
  if (bits % 8 != 0 || bits / 8 > kMaxBytes) {
    throw UsageError("BitString: length must be a whole number of bytes <= 512 bits");
  }
  len_ = static_cast<std::uint8_t>(bits / 8);
}

BitString BitString::from_bytes(ByteSpan bytes) {
  BitString out(bytes.size() * 8);
  std::copy(bytes.begin(), bytes.end(), out.data_.begin());
  return out;
}

BitString BitString::from_hex(std::string_view hex) {
  const Bytes raw = sika::from_hex(hex);
  return from_bytes(raw);
}

bool BitString::is_zero() const {
  return std::all_of(data_.begin(), data_.begin() + len_, [](std::uint8_t b) { return b == 0; });
}

std::string BitString::to_hex() const { return sika::to_hex(bytes()); }

BitString& BitString::operator^=(const BitString& other) {
  if (other.len_ != len_) {
    throw UsageError("xor: length mismatch");
  }
  for (std::size_t i = 0; i < len_; ++i) {
    data_[i] ^= other.data_[i];
  }
  return *this;
}

BitString BitString::slice(std::size_t offset_bytes, std::size_t len_bytes) const {
  if (offset_bytes + len_bytes > len_) {
    throw UsageError("BitString::slice out of range");
  }
  return from_bytes(bytes().subspan(offset_bytes, len_bytes));
}

BitString concat(const BitString& a, const BitString& b) {
  BitString out((a.size_bytes() + b.size_bytes()) * 8);
  std::copy_n(a.data(), a.size_bytes(), out.data());
  std::copy_n(b.data(), b.size_bytes(), out.data() + a.size_bytes());
  return out;
}

bool operator==(const BitString& a, const BitString& b) {
  return a.len_ == b.len_ && std::memcmp(a.data(), b.data(), a.len_) == 0;
}

std::strong_ordering operator<=>(const BitString& a, const BitString& b) {
  if (a.len_ != b.len_) {
    return a.len_ <=> b.len_;
  }
  const int c = std::memcmp(a.data(), b.data(), a.len_);
  return c <=> 0;
}

BitString xor_bits(const BitString& a, const BitString& b) { return a ^ b; }

std::size_t BitStringHash::operator()(const BitString& b) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull ^ b.size_bytes();
  for (std::size_t i = 0; i < b.size_bytes(); i += 8) {
    std::uint64_t w = 0;
    std::memcpy(&w, b.data() + i, std::min<std::size_t>(8, b.size_bytes() - i));
    h = (h ^ w) * 0x100000001b3ull;
    h ^= h >> 32;
  }
  return static_cast<std::size_t>(h);
}

void xor_into(MutableByteSpan dst, ByteSpan src) {
  if (dst.size() != src.size()) {
    throw UsageError("xor: length mismatch");
  }
  std::size_t i = 0;
  for (; i + 8 <= dst.size(); i += 8) {
    std::uint64_t a;
    std::uint64_t b;
    std::memcpy(&a, dst.data() + i, 8);
    std::memcpy(&b, src.data() + i, 8);
    a ^= b;
    std::memcpy(dst.data() + i, &a, 8);
  }
  for (; i < dst.size(); ++i) {
    dst[i] ^= src[i];
  }
}

void BlockVec::set(std::size_t i, const BitString& v) {
  if (v.size_bytes() != width_) {
    throw UsageError("BlockVec::set: width mismatch");
  }
  std::copy_n(v.data(), width_, data_.data() + i * width_);
}

std::string to_hex(ByteSpan bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) {
    throw UsageError("hex string has odd length");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw UsageError("invalid hex digit");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

}  // namespace sika
