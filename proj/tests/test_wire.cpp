#include <gtest/gtest.h>

#include "watz/wire.hpp"

using namespace watz;
using namespace watz::wire;

namespace {

crypto::Point sample_point(std::uint8_t fill) {
  crypto::Point p;
  p.fill(fill);
  p[0] = 0x04;
  return p;
}

template <typename F>
WireErrc wire_error(F&& f) {
  try {
    f();
  } catch (const WireError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no WireError thrown";
  return WireErrc::malformed_message;
}

}  // namespace

TEST(Frame, HeaderLayout) {
  const Bytes frame = encode_frame(MsgType::msg2, from_hex("aabbcc"));
  EXPECT_EQ(to_hex(frame), "5741545a0200000003aabbcc");
  const auto decoded = decode_frame(frame);
  EXPECT_EQ(decoded.consumed, frame.size());
  EXPECT_EQ(decoded.frame.type, MsgType::msg2);
  EXPECT_EQ(to_hex(decoded.frame.payload), "aabbcc");
}

TEST(Frame, EmptyPayload) {
  const Bytes frame = encode_frame(MsgType::msg0, {});
  EXPECT_EQ(frame.size(), kFrameHeaderSize);
  EXPECT_TRUE(decode_frame(frame).frame.payload.empty());
}

TEST(Frame, DecodesOnlyTheFirstFrame) {
  Bytes stream = encode_frame(MsgType::msg1, from_hex("01"));
  append(stream, encode_frame(MsgType::msg3, from_hex("0203")));
  const auto first = decode_frame(stream);
  EXPECT_EQ(first.frame.type, MsgType::msg1);
  const auto second = decode_frame(ByteView(stream).subspan(first.consumed));
  EXPECT_EQ(second.frame.type, MsgType::msg3);
  EXPECT_EQ(to_hex(second.frame.payload), "0203");
}

TEST(Frame, Errors) {
  EXPECT_EQ(wire_error([] { decode_frame(from_hex("574154")); }), WireErrc::truncated);
  EXPECT_EQ(wire_error([] { decode_frame(from_hex("574154590000000000")); }), WireErrc::bad_magic);
  EXPECT_EQ(wire_error([] { decode_frame(from_hex("5741545a0400000000")); }), WireErrc::unknown_type);
  EXPECT_EQ(wire_error([] { decode_frame(from_hex("5741545a0001000001")); }), WireErrc::oversize);
  EXPECT_EQ(wire_error([] { decode_frame(from_hex("5741545a0000000002aa")); }), WireErrc::truncated);
  EXPECT_EQ(wire_error([] { encode_frame(static_cast<MsgType>(9), {}); }), WireErrc::unknown_type);
}

TEST(Frame, MaximumPayloadAccepted) {
  // 16 MiB exactly passes the header check; one more byte does not.
  EXPECT_EQ(decode_frame_header(from_hex("5741545a0301000000")).payload_len, kMaxPayload);
  EXPECT_EQ(wire_error([] { decode_frame_header(from_hex("5741545a0301000001")); }), WireErrc::oversize);
}

TEST(Msg0, RoundTrip) {
  const Msg0Payload m{sample_point(0x11)};
  const Bytes enc = encode_msg0(m);
  EXPECT_EQ(enc.size(), 65u);
  EXPECT_EQ(decode_msg0(enc), m);
  EXPECT_EQ(wire_error([&] { decode_msg0(ByteView(enc).first(64)); }), WireErrc::malformed_message);
  Bytes compressed = enc;
  compressed[0] = 0x02;
  EXPECT_EQ(wire_error([&] { decode_msg0(compressed); }), WireErrc::malformed_message);
}

TEST(Msg1, LayoutAndRoundTrip) {
  Msg1Payload m;
  m.g_v = sample_point(0x21);
  m.v_identity = sample_point(0x22);
  m.signature.fill(0x23);
  m.mac.fill(0x24);
  const Bytes enc = encode_msg1(m);
  ASSERT_EQ(enc.size(), 210u);
  EXPECT_EQ(enc[1], 0x21);
  EXPECT_EQ(enc[66], 0x22);
  EXPECT_EQ(enc[130], 0x23);
  EXPECT_EQ(enc[194], 0x24);
  EXPECT_EQ(decode_msg1(enc), m);
  const Bytes content = msg1_content(m);
  EXPECT_EQ(content, Bytes(enc.begin(), enc.begin() + 194));
  Bytes longer = enc;
  longer.push_back(0);
  EXPECT_EQ(wire_error([&] { decode_msg1(longer); }), WireErrc::malformed_message);
}

TEST(Msg2, LayoutAndRoundTrip) {
  Msg2Payload m;
  m.g_a = sample_point(0x31);
  m.evidence = Bytes(197, 0x32);
  m.signature.fill(0x33);
  m.mac.fill(0x34);
  const Bytes enc = encode_msg2(m);
  ASSERT_EQ(enc.size(), 65u + 4 + 197 + 64 + 16);
  EXPECT_EQ(to_hex(ByteView(enc).subspan(65, 4)), "000000c5");
  EXPECT_EQ(enc[69], 0x32);
  EXPECT_EQ(enc[69 + 197], 0x33);
  EXPECT_EQ(enc[69 + 197 + 64], 0x34);
  EXPECT_EQ(decode_msg2(enc), m);
  EXPECT_EQ(msg2_content(m), Bytes(enc.begin(), enc.end() - 16));
}

TEST(Msg2, LengthMismatch) {
  Msg2Payload m;
  m.g_a = sample_point(0x31);
  m.evidence = Bytes(197, 0x32);
  Bytes enc = encode_msg2(m);
  enc[68] = 0xc6;  // claims one byte more evidence than present
  EXPECT_EQ(wire_error([&] { decode_msg2(enc); }), WireErrc::malformed_message);
  enc[65] = 0xff;  // absurd length must not overflow
  EXPECT_EQ(wire_error([&] { decode_msg2(enc); }), WireErrc::malformed_message);
  EXPECT_EQ(wire_error([] { decode_msg2(Bytes(100)); }), WireErrc::malformed_message);
}

TEST(Msg3, RoundTrip) {
  Msg3Payload m;
  m.iv.fill(0x41);
  m.ciphertext_and_tag = Bytes(16 + 5, 0x42);
  const Bytes enc = encode_msg3(m);
  EXPECT_EQ(enc.size(), 12u + 21);
  EXPECT_EQ(decode_msg3(enc), m);
  EXPECT_EQ(wire_error([] { decode_msg3(Bytes(27)); }), WireErrc::malformed_message);
  EXPECT_EQ(decode_msg3(Bytes(28)).ciphertext_and_tag.size(), 16u);
}
