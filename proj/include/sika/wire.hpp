#pragma once

#include <cstdint>
#include <string>

#include "sika/bitstring.hpp"
#include "sika/sika.hpp"

namespace sika {

/// Party numbering on the wire: providers are 1..n, the collector is 0.
inline constexpr std::uint16_t kCollectorIndex = 0;

enum class MsgType : std::uint8_t {
  hello = 0,  // TCP handshake only; identifies the dialing party
  okvs = 1,
  bmsg = 2,
  payload = 3,
  abort = 4,
  done = 5,
};

/// "SIKA" ‖ version u8 ‖ type u8 ‖ session id (16) ‖ sender u16 LE ‖
/// receiver u16 LE ‖ body length u64 LE ‖ body.
inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 1 + 16 + 2 + 2 + 8;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint64_t kMaxFrameBody = std::uint64_t{1} << 32;

struct Frame {
  MsgType type = MsgType::done;
  SessionId session{};
  std::uint16_t sender = 0;
  std::uint16_t receiver = 0;
  Bytes body;

  std::size_t wire_size() const { return kFrameHeaderBytes + body.size(); }
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameHeader {
  MsgType type;
  SessionId session;
  std::uint16_t sender;
  std::uint16_t receiver;
  std::uint64_t body_len;
};

Bytes encode_frame(const Frame& f);

/// Validates magic, version, type and length. Throws ProtocolError.
FrameHeader parse_frame_header(ByteSpan header);

/// Full decode; additionally checks the session id and exact size.
Frame decode_frame(ByteSpan bytes, const SessionId& expected_session);

/// "P<i>" for providers, "C" for the collector.
std::string party_name(std::uint16_t index);
const char* msg_type_name(MsgType t);

}  // namespace sika
