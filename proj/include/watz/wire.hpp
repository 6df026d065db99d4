#pragma once

// Byte layouts of the four protocol messages and the TCP frame around them.
//
//   frame := "WATZ" | type:u8 | payload_len:u32be | payload
//   msg0  := G_a(65)
//   msg1  := G_v(65) | V(65) | SIGN_V(G_v | G_a)(64) | MAC_Km(preceding)(16)
//   msg2  := G_a(65) | evidence_len:u32be | evidence | SIGN_A(evidence)(64) | MAC_Km(preceding)(16)
//   msg3  := iv(12) | AES-GCM_Ke(data) | tag(16)

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "watz/bytes.hpp"
#include "watz/crypto.hpp"

namespace watz::wire {

inline constexpr ByteArray<4> kMagic = {'W', 'A', 'T', 'Z'};
inline constexpr std::size_t kFrameHeaderSize = 9;
inline constexpr std::uint32_t kMaxPayload = 16u * 1024u * 1024u;

enum class MsgType : std::uint8_t { msg0 = 0, msg1 = 1, msg2 = 2, msg3 = 3 };

enum class WireErrc {
  bad_magic,
  unknown_type,
  oversize,
  truncated,
  malformed_message,
};

const char* to_string(WireErrc code) noexcept;

class WireError : public std::runtime_error {
 public:
  WireError(WireErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  WireErrc code() const noexcept { return code_; }

 private:
  WireErrc code_;
};

struct Frame {
  MsgType type;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameHeader {
  MsgType type;
  std::uint32_t payload_len;
};

Bytes encode_frame(MsgType type, ByteView payload);
/// Validates magic, type and length of a 9-byte header.
FrameHeader decode_frame_header(ByteView header);

struct DecodedFrame {
  Frame frame;
  std::size_t consumed;
};
/// Reads exactly one frame from the front of `stream`.
DecodedFrame decode_frame(ByteView stream);

struct Msg0Payload {
  crypto::Point g_a{};

  friend bool operator==(const Msg0Payload&, const Msg0Payload&) = default;
};

struct Msg1Payload {
  crypto::Point g_v{};
  crypto::Point v_identity{};
  crypto::Signature signature{};
  crypto::MacTag mac{};

  static constexpr std::size_t kSize = 65 + 65 + 64 + 16;
  static constexpr std::size_t kMacOffset = kSize - 16;

  friend bool operator==(const Msg1Payload&, const Msg1Payload&) = default;
};

struct Msg2Payload {
  crypto::Point g_a{};
  Bytes evidence;
  crypto::Signature signature{};
  crypto::MacTag mac{};

  friend bool operator==(const Msg2Payload&, const Msg2Payload&) = default;
};

struct Msg3Payload {
  crypto::Iv iv{};
  Bytes ciphertext_and_tag;

  friend bool operator==(const Msg3Payload&, const Msg3Payload&) = default;
};

Bytes encode_msg0(const Msg0Payload& msg);
Msg0Payload decode_msg0(ByteView payload);

Bytes encode_msg1(const Msg1Payload& msg);
Msg1Payload decode_msg1(ByteView payload);
/// G_v | V | signature: the bytes msg1's MAC covers.
Bytes msg1_content(const Msg1Payload& msg);

Bytes encode_msg2(const Msg2Payload& msg);
Msg2Payload decode_msg2(ByteView payload);
/// Everything in the msg2 encoding before the MAC.
Bytes msg2_content(const Msg2Payload& msg);

Bytes encode_msg3(const Msg3Payload& msg);
Msg3Payload decode_msg3(ByteView payload);

}  // namespace watz::wire
