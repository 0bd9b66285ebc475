#include "sika/wire.hpp"

#include <algorithm>
#include <cstring>

namespace sika {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'I', 'K', 'A'};

void put_le(Bytes& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(ByteSpan in, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | in[off + static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

Bytes encode_frame(const Frame& f) {
  if (f.body.size() > kMaxFrameBody) {
    throw UsageError("frame body exceeds 2^32 bytes");
  }
  Bytes out;
  out.reserve(f.wire_size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kWireVersion);
  out.push_back(static_cast<std::uint8_t>(f.type));
  out.insert(out.end(), f.session.begin(), f.session.end());
  put_le(out, f.sender, 2);
  put_le(out, f.receiver, 2);
  put_le(out, f.body.size(), 8);
  out.insert(out.end(), f.body.begin(), f.body.end());
  return out;
}

FrameHeader parse_frame_header(ByteSpan h) {
  if (h.size() < kFrameHeaderBytes) {
    throw ProtocolError("frame header truncated");
  }
  if (std::memcmp(h.data(), kMagic, 4) != 0) {
    throw ProtocolError("bad frame magic");
  }
  if (h[4] != kWireVersion) {
    throw ProtocolError("unsupported frame version " + std::to_string(h[4]));
  }
  if (h[5] > static_cast<std::uint8_t>(MsgType::done)) {
    throw ProtocolError("unknown frame type " + std::to_string(h[5]));
  }
  FrameHeader fh{};
  fh.type = static_cast<MsgType>(h[5]);
  std::copy_n(h.begin() + 6, 16, fh.session.begin());
  fh.sender = static_cast<std::uint16_t>(get_le(h, 22, 2));
  fh.receiver = static_cast<std::uint16_t>(get_le(h, 24, 2));
  fh.body_len = get_le(h, 26, 8);
  if (fh.body_len > kMaxFrameBody) {
    throw ProtocolError("frame body length exceeds 2^32");
  }
  return fh;
}

Frame decode_frame(ByteSpan bytes, const SessionId& expected_session) {
  const FrameHeader h = parse_frame_header(bytes);
  if (h.session != expected_session) {
    throw ProtocolError("frame belongs to a different session");
  }
  if (bytes.size() - kFrameHeaderBytes != h.body_len) {
    throw ProtocolError("frame size does not match its length field");
  }
  Frame f;
  f.type = h.type;
  f.session = h.session;
  f.sender = h.sender;
  f.receiver = h.receiver;
  f.body.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
  return f;
}

std::string party_name(std::uint16_t index) {
  return index == kCollectorIndex ? std::string("C") : "P" + std::to_string(index);
}

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::hello: return "HELLO";
    case MsgType::okvs: return "OKVS";
    case MsgType::bmsg: return "BMSG";
    case MsgType::payload: return "PAYLOAD";
    case MsgType::abort: return "ABORT";
    case MsgType::done: return "DONE";
  }
  return "?";
}

}  // namespace sika
