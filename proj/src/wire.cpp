#include "watz/wire.hpp"

namespace watz::wire {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw WireError(WireErrc::malformed_message, what); }

crypto::Point take_point(ByteView bytes, const char* field) {
  if (bytes[0] != 0x04) malformed(std::string(field) + ": point is not SEC1 uncompressed");
  return array_from<crypto::kPointSize>(bytes);
}

}  // namespace

const char* to_string(WireErrc code) noexcept {
  switch (code) {
    case WireErrc::bad_magic:
      return "bad-magic";
    case WireErrc::unknown_type:
      return "unknown-type";
    case WireErrc::oversize:
      return "oversize";
    case WireErrc::truncated:
      return "truncated";
    case WireErrc::malformed_message:
      return "malformed-message";
  }
  return "unknown";
}

Bytes encode_frame(MsgType type, ByteView payload) {
  if (static_cast<std::uint8_t>(type) > 3) throw WireError(WireErrc::unknown_type, "unknown message type");
  if (payload.size() > kMaxPayload) throw WireError(WireErrc::oversize, "payload exceeds 16 MiB");
  Bytes out;
  out.reserve(kFrameHeaderSize + payload.size());
  append(out, kMagic);
  out.push_back(static_cast<std::uint8_t>(type));
  append_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  append(out, payload);
  return out;
}

FrameHeader decode_frame_header(ByteView header) {
  if (header.size() < kFrameHeaderSize) throw WireError(WireErrc::truncated, "truncated frame header");
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin())) {
    throw WireError(WireErrc::bad_magic, "bad frame magic");
  }
  if (header[4] > 3) throw WireError(WireErrc::unknown_type, "unknown message type " + std::to_string(header[4]));
  const std::uint32_t len = load_u32_be(header.subspan(5, 4));
  if (len > kMaxPayload) throw WireError(WireErrc::oversize, "frame payload of " + std::to_string(len) + " bytes");
  return {static_cast<MsgType>(header[4]), len};
}

DecodedFrame decode_frame(ByteView stream) {
  const FrameHeader header = decode_frame_header(stream);
  if (stream.size() - kFrameHeaderSize < header.payload_len) {
    throw WireError(WireErrc::truncated, "truncated frame payload");
  }
  const auto payload = stream.subspan(kFrameHeaderSize, header.payload_len);
  return {Frame{header.type, Bytes(payload.begin(), payload.end())}, kFrameHeaderSize + header.payload_len};
}

Bytes encode_msg0(const Msg0Payload& msg) { return Bytes(msg.g_a.begin(), msg.g_a.end()); }

Msg0Payload decode_msg0(ByteView payload) {
  if (payload.size() != crypto::kPointSize) malformed("msg0 must be 65 bytes");
  return {take_point(payload, "msg0.g_a")};
}

Bytes msg1_content(const Msg1Payload& msg) {
  Bytes out;
  out.reserve(Msg1Payload::kMacOffset);
  append(out, msg.g_v);
  append(out, msg.v_identity);
  append(out, msg.signature);
  return out;
}

Bytes encode_msg1(const Msg1Payload& msg) {
  Bytes out = msg1_content(msg);
  append(out, msg.mac);
  return out;
}

Msg1Payload decode_msg1(ByteView payload) {
  if (payload.size() != Msg1Payload::kSize) malformed("msg1 must be 210 bytes");
  Msg1Payload msg;
  msg.g_v = take_point(payload.subspan(0, 65), "msg1.g_v");
  msg.v_identity = take_point(payload.subspan(65, 65), "msg1.v");
  msg.signature = array_from<64>(payload.subspan(130, 64));
  msg.mac = array_from<16>(payload.subspan(194, 16));
  return msg;
}

Bytes msg2_content(const Msg2Payload& msg) {
  Bytes out;
  out.reserve(65 + 4 + msg.evidence.size() + 64);
  append(out, msg.g_a);
  append_u32_be(out, static_cast<std::uint32_t>(msg.evidence.size()));
  append(out, msg.evidence);
  append(out, msg.signature);
  return out;
}

Bytes encode_msg2(const Msg2Payload& msg) {
  Bytes out = msg2_content(msg);
  append(out, msg.mac);
  return out;
}

Msg2Payload decode_msg2(ByteView payload) {
  constexpr std::size_t kFixed = 65 + 4 + 64 + 16;
  if (payload.size() < kFixed) malformed("msg2 shorter than its fixed fields");
  const std::uint32_t evidence_len = load_u32_be(payload.subspan(65, 4));
  if (payload.size() != kFixed + std::size_t{evidence_len}) malformed("msg2 length disagrees with evidence length");
  Msg2Payload msg;
  msg.g_a = take_point(payload.subspan(0, 65), "msg2.g_a");
  const auto ev = payload.subspan(69, evidence_len);
  msg.evidence.assign(ev.begin(), ev.end());
  msg.signature = array_from<64>(payload.subspan(69 + evidence_len, 64));
  msg.mac = array_from<16>(payload.subspan(69 + evidence_len + 64, 16));
  return msg;
}

Bytes encode_msg3(const Msg3Payload& msg) {
  Bytes out;
  out.reserve(msg.iv.size() + msg.ciphertext_and_tag.size());
  append(out, msg.iv);
  append(out, msg.ciphertext_and_tag);
  return out;
}

Msg3Payload decode_msg3(ByteView payload) {
  if (payload.size() < crypto::kIvSize + crypto::kTagSize) malformed("msg3 shorter than iv and tag");
  Msg3Payload msg;
  msg.iv = array_from<crypto::kIvSize>(payload.first(crypto::kIvSize));
  const auto rest = payload.subspan(crypto::kIvSize);
  msg.ciphertext_and_tag.assign(rest.begin(), rest.end());
  return msg;
}

}  // namespace watz::wire
