#pragma once

// Opcode table shared by the validator, the interpreter and the text
// assembler. Prefixed opcodes are stored as 0xFC00 | subopcode.

#include <cstdint>
#include <string_view>

namespace watz::wasm::op {

enum class Imm : std::uint8_t {
  none,
  block_type,
  label,
  br_table,
  func,
  call_indirect,
  local,
  global,
  memarg,
  mem_zero,      // one reserved 0x00 byte
  mem_zero_two,  // two reserved 0x00 bytes
  i32,
  i64,
  f32,
  f64,
  select_typed,
};

struct Info {
  std::string_view name;
  std::uint16_t code;
  Imm imm;
  // Operand signature for plain instructions, "params:results" with
  // i = i32, I = i64, f = f32, F = f64. Empty for control/variable ops.
  std::string_view sig;
  std::uint8_t access_size = 0;  // bytes touched by loads/stores
};

inline constexpr std::uint16_t kPrefixFC = 0xFC00;

// clang-format off
inline constexpr Info kTable[] = {
  {"unreachable", 0x00, Imm::none, ""},
  {"nop", 0x01, Imm::none, ""},
  {"block", 0x02, Imm::block_type, ""},
  {"loop", 0x03, Imm::block_type, ""},
  {"if", 0x04, Imm::block_type, ""},
  {"else", 0x05, Imm::none, ""},
  {"end", 0x0B, Imm::none, ""},
  {"br", 0x0C, Imm::label, ""},
  {"br_if", 0x0D, Imm::label, ""},
  {"br_table", 0x0E, Imm::br_table, ""},
  {"return", 0x0F, Imm::none, ""},
  {"call", 0x10, Imm::func, ""},
  {"call_indirect", 0x11, Imm::call_indirect, ""},
  {"drop", 0x1A, Imm::none, ""},
  {"select", 0x1B, Imm::none, ""},
  {"select_t", 0x1C, Imm::select_typed, ""},
  {"local.get", 0x20, Imm::local, ""},
  {"local.set", 0x21, Imm::local, ""},
  {"local.tee", 0x22, Imm::local, ""},
  {"global.get", 0x23, Imm::global, ""},
  {"global.set", 0x24, Imm::global, ""},

  {"i32.load", 0x28, Imm::memarg, "i:i", 4},
  {"i64.load", 0x29, Imm::memarg, "i:I", 8},
  {"f32.load", 0x2A, Imm::memarg, "i:f", 4},
  {"f64.load", 0x2B, Imm::memarg, "i:F", 8},
  {"i32.load8_s", 0x2C, Imm::memarg, "i:i", 1},
  {"i32.load8_u", 0x2D, Imm::memarg, "i:i", 1},
  {"i32.load16_s", 0x2E, Imm::memarg, "i:i", 2},
  {"i32.load16_u", 0x2F, Imm::memarg, "i:i", 2},
  {"i64.load8_s", 0x30, Imm::memarg, "i:I", 1},
  {"i64.load8_u", 0x31, Imm::memarg, "i:I", 1},
  {"i64.load16_s", 0x32, Imm::memarg, "i:I", 2},
  {"i64.load16_u", 0x33, Imm::memarg, "i:I", 2},
  {"i64.load32_s", 0x34, Imm::memarg, "i:I", 4},
  {"i64.load32_u", 0x35, Imm::memarg, "i:I", 4},
  {"i32.store", 0x36, Imm::memarg, "ii:", 4},
  {"i64.store", 0x37, Imm::memarg, "iI:", 8},
  {"f32.store", 0x38, Imm::memarg, "if:", 4},
  {"f64.store", 0x39, Imm::memarg, "iF:", 8},
  {"i32.store8", 0x3A, Imm::memarg, "ii:", 1},
  {"i32.store16", 0x3B, Imm::memarg, "ii:", 2},
  {"i64.store8", 0x3C, Imm::memarg, "iI:", 1},
  {"i64.store16", 0x3D, Imm::memarg, "iI:", 2},
  {"i64.store32", 0x3E, Imm::memarg, "iI:", 4},
  {"memory.size", 0x3F, Imm::mem_zero, ":i"},
  {"memory.grow", 0x40, Imm::mem_zero, "i:i"},

  {"i32.const", 0x41, Imm::i32, ":i"},
  {"i64.const", 0x42, Imm::i64, ":I"},
  {"f32.const", 0x43, Imm::f32, ":f"},
  {"f64.const", 0x44, Imm::f64, ":F"},

  {"i32.eqz", 0x45, Imm::none, "i:i"},
  {"i32.eq", 0x46, Imm::none, "ii:i"},
  {"i32.ne", 0x47, Imm::none, "ii:i"},
  {"i32.lt_s", 0x48, Imm::none, "ii:i"},
  {"i32.lt_u", 0x49, Imm::none, "ii:i"},
  {"i32.gt_s", 0x4A, Imm::none, "ii:i"},
  {"i32.gt_u", 0x4B, Imm::none, "ii:i"},
  {"i32.le_s", 0x4C, Imm::none, "ii:i"},
  {"i32.le_u", 0x4D, Imm::none, "ii:i"},
  {"i32.ge_s", 0x4E, Imm::none, "ii:i"},
  {"i32.ge_u", 0x4F, Imm::none, "ii:i"},
  {"i64.eqz", 0x50, Imm::none, "I:i"},
  {"i64.eq", 0x51, Imm::none, "II:i"},
  {"i64.ne", 0x52, Imm::none, "II:i"},
  {"i64.lt_s", 0x53, Imm::none, "II:i"},
  {"i64.lt_u", 0x54, Imm::none, "II:i"},
  {"i64.gt_s", 0x55, Imm::none, "II:i"},
  {"i64.gt_u", 0x56, Imm::none, "II:i"},
  {"i64.le_s", 0x57, Imm::none, "II:i"},
  {"i64.le_u", 0x58, Imm::none, "II:i"},
  {"i64.ge_s", 0x59, Imm::none, "II:i"},
  {"i64.ge_u", 0x5A, Imm::none, "II:i"},
  {"f32.eq", 0x5B, Imm::none, "ff:i"},
  {"f32.ne", 0x5C, Imm::none, "ff:i"},
  {"f32.lt", 0x5D, Imm::none, "ff:i"},
  {"f32.gt", 0x5E, Imm::none, "ff:i"},
  {"f32.le", 0x5F, Imm::none, "ff:i"},
  {"f32.ge", 0x60, Imm::none, "ff:i"},
  {"f64.eq", 0x61, Imm::none, "FF:i"},
  {"f64.ne", 0x62, Imm::none, "FF:i"},
  {"f64.lt", 0x63, Imm::none, "FF:i"},
  {"f64.gt", 0x64, Imm::none, "FF:i"},
  {"f64.le", 0x65, Imm::none, "FF:i"},
  {"f64.ge", 0x66, Imm::none, "FF:i"},

  {"i32.clz", 0x67, Imm::none, "i:i"},
  {"i32.ctz", 0x68, Imm::none, "i:i"},
  {"i32.popcnt", 0x69, Imm::none, "i:i"},
  {"i32.add", 0x6A, Imm::none, "ii:i"},
  {"i32.sub", 0x6B, Imm::none, "ii:i"},
  {"i32.mul", 0x6C, Imm::none, "ii:i"},
  {"i32.div_s", 0x6D, Imm::none, "ii:i"},
  {"i32.div_u", 0x6E, Imm::none, "ii:i"},
  {"i32.rem_s", 0x6F, Imm::none, "ii:i"},
  {"i32.rem_u", 0x70, Imm::none, "ii:i"},
  {"i32.and", 0x71, Imm::none, "ii:i"},
  {"i32.or", 0x72, Imm::none, "ii:i"},
  {"i32.xor", 0x73, Imm::none, "ii:i"},
  {"i32.shl", 0x74, Imm::none, "ii:i"},
  {"i32.shr_s", 0x75, Imm::none, "ii:i"},
  {"i32.shr_u", 0x76, Imm::none, "ii:i"},
  {"i32.rotl", 0x77, Imm::none, "ii:i"},
  {"i32.rotr", 0x78, Imm::none, "ii:i"},
  {"i64.clz", 0x79, Imm::none, "I:I"},
  {"i64.ctz", 0x7A, Imm::none, "I:I"},
  {"i64.popcnt", 0x7B, Imm::none, "I:I"},
  {"i64.add", 0x7C, Imm::none, "II:I"},
  {"i64.sub", 0x7D, Imm::none, "II:I"},
  {"i64.mul", 0x7E, Imm::none, "II:I"},
  {"i64.div_s", 0x7F, Imm::none, "II:I"},
  {"i64.div_u", 0x80, Imm::none, "II:I"},
  {"i64.rem_s", 0x81, Imm::none, "II:I"},
  {"i64.rem_u", 0x82, Imm::none, "II:I"},
  {"i64.and", 0x83, Imm::none, "II:I"},
  {"i64.or", 0x84, Imm::none, "II:I"},
  {"i64.xor", 0x85, Imm::none, "II:I"},
  {"i64.shl", 0x86, Imm::none, "II:I"},
  {"i64.shr_s", 0x87, Imm::none, "II:I"},
  {"i64.shr_u", 0x88, Imm::none, "II:I"},
  {"i64.rotl", 0x89, Imm::none, "II:I"},
  {"i64.rotr", 0x8A, Imm::none, "II:I"},
  {"f32.abs", 0x8B, Imm::none, "f:f"},
  {"f32.neg", 0x8C, Imm::none, "f:f"},
  {"f32.ceil", 0x8D, Imm::none, "f:f"},
  {"f32.floor", 0x8E, Imm::none, "f:f"},
  {"f32.trunc", 0x8F, Imm::none, "f:f"},
  {"f32.nearest", 0x90, Imm::none, "f:f"},
  {"f32.sqrt", 0x91, Imm::none, "f:f"},
  {"f32.add", 0x92, Imm::none, "ff:f"},
  {"f32.sub", 0x93, Imm::none, "ff:f"},
  {"f32.mul", 0x94, Imm::none, "ff:f"},
  {"f32.div", 0x95, Imm::none, "ff:f"},
  {"f32.min", 0x96, Imm::none, "ff:f"},
  {"f32.max", 0x97, Imm::none, "ff:f"},
  {"f32.copysign", 0x98, Imm::none, "ff:f"},
  {"f64.abs", 0x99, Imm::none, "F:F"},
  {"f64.neg", 0x9A, Imm::none, "F:F"},
  {"f64.ceil", 0x9B, Imm::none, "F:F"},
  {"f64.floor", 0x9C, Imm::none, "F:F"},
  {"f64.trunc", 0x9D, Imm::none, "F:F"},
  {"f64.nearest", 0x9E, Imm::none, "F:F"},
  {"f64.sqrt", 0x9F, Imm::none, "F:F"},
  {"f64.add", 0xA0, Imm::none, "FF:F"},
  {"f64.sub", 0xA1, Imm::none, "FF:F"},
  {"f64.mul", 0xA2, Imm::none, "FF:F"},
  {"f64.div", 0xA3, Imm::none, "FF:F"},
  {"f64.min", 0xA4, Imm::none, "FF:F"},
  {"f64.max", 0xA5, Imm::none, "FF:F"},
  {"f64.copysign", 0xA6, Imm::none, "FF:F"},

  {"i32.wrap_i64", 0xA7, Imm::none, "I:i"},
  {"i32.trunc_f32_s", 0xA8, Imm::none, "f:i"},
  {"i32.trunc_f32_u", 0xA9, Imm::none, "f:i"},
  {"i32.trunc_f64_s", 0xAA, Imm::none, "F:i"},
  {"i32.trunc_f64_u", 0xAB, Imm::none, "F:i"},
  {"i64.extend_i32_s", 0xAC, Imm::none, "i:I"},
  {"i64.extend_i32_u", 0xAD, Imm::none, "i:I"},
  {"i64.trunc_f32_s", 0xAE, Imm::none, "f:I"},
  {"i64.trunc_f32_u", 0xAF, Imm::none, "f:I"},
  {"i64.trunc_f64_s", 0xB0, Imm::none, "F:I"},
  {"i64.trunc_f64_u", 0xB1, Imm::none, "F:I"},
  {"f32.convert_i32_s", 0xB2, Imm::none, "i:f"},
  {"f32.convert_i32_u", 0xB3, Imm::none, "i:f"},
  {"f32.convert_i64_s", 0xB4, Imm::none, "I:f"},
  {"f32.convert_i64_u", 0xB5, Imm::none, "I:f"},
  {"f32.demote_f64", 0xB6, Imm::none, "F:f"},
  {"f64.convert_i32_s", 0xB7, Imm::none, "i:F"},
  {"f64.convert_i32_u", 0xB8, Imm::none, "i:F"},
  {"f64.convert_i64_s", 0xB9, Imm::none, "I:F"},
  {"f64.convert_i64_u", 0xBA, Imm::none, "I:F"},
  {"f64.promote_f32", 0xBB, Imm::none, "f:F"},
  {"i32.reinterpret_f32", 0xBC, Imm::none, "f:i"},
  {"i64.reinterpret_f64", 0xBD, Imm::none, "F:I"},
  {"f32.reinterpret_i32", 0xBE, Imm::none, "i:f"},
  {"f64.reinterpret_i64", 0xBF, Imm::none, "I:F"},
  {"i32.extend8_s", 0xC0, Imm::none, "i:i"},
  {"i32.extend16_s", 0xC1, Imm::none, "i:i"},
  {"i64.extend8_s", 0xC2, Imm::none, "I:I"},
  {"i64.extend16_s", 0xC3, Imm::none, "I:I"},
  {"i64.extend32_s", 0xC4, Imm::none, "I:I"},

  {"i32.trunc_sat_f32_s", kPrefixFC | 0, Imm::none, "f:i"},
  {"i32.trunc_sat_f32_u", kPrefixFC | 1, Imm::none, "f:i"},
  {"i32.trunc_sat_f64_s", kPrefixFC | 2, Imm::none, "F:i"},
  {"i32.trunc_sat_f64_u", kPrefixFC | 3, Imm::none, "F:i"},
  {"i64.trunc_sat_f32_s", kPrefixFC | 4, Imm::none, "f:I"},
  {"i64.trunc_sat_f32_u", kPrefixFC | 5, Imm::none, "f:I"},
  {"i64.trunc_sat_f64_s", kPrefixFC | 6, Imm::none, "F:I"},
  {"i64.trunc_sat_f64_u", kPrefixFC | 7, Imm::none, "F:I"},
  {"memory.copy", kPrefixFC | 10, Imm::mem_zero_two, "iii:"},
  {"memory.fill", kPrefixFC | 11, Imm::mem_zero, "iii:"},
};
// clang-format on

/// nullptr for opcodes this engine does not implement.
const Info* by_code(std::uint16_t code) noexcept;
const Info* by_name(std::string_view name) noexcept;

// Internal opcodes emitted by the compiler. They reuse the codes of the
// structured instructions they replace.
inline constexpr std::uint16_t kJump = 0x05;  // `else` becomes a jump to the matching end

}  // namespace watz::wasm::op
