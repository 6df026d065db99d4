#include "watz/wasm/types.hpp"

namespace watz::wasm {

const char* to_string(ValType t) noexcept {
  switch (t) {
    case ValType::i32: return "i32";
    case ValType::i64: return "i64";
    case ValType::f32: return "f32";
    case ValType::f64: return "f64";
  }
  return "?";
}

std::string to_string(const FuncType& type) {
  std::string out = "(";
  for (std::size_t i = 0; i < type.params.size(); ++i) {
    if (i) out += ", ";
    out += to_string(type.params[i]);
  }
  out += ") -> (";
  for (std::size_t i = 0; i < type.results.size(); ++i) {
    if (i) out += ", ";
    out += to_string(type.results[i]);
  }
  return out + ")";
}

const char* to_string(TrapKind kind) noexcept {
  switch (kind) {
    case TrapKind::unreachable: return "unreachable executed";
    case TrapKind::memory_out_of_bounds: return "out of bounds memory access";
    case TrapKind::integer_divide_by_zero: return "integer divide by zero";
    case TrapKind::integer_overflow: return "integer overflow";
    case TrapKind::invalid_conversion: return "invalid conversion to integer";
    case TrapKind::undefined_element: return "undefined element";
    case TrapKind::uninitialized_element: return "uninitialized element";
    case TrapKind::indirect_call_type_mismatch: return "indirect call type mismatch";
    case TrapKind::call_stack_exhausted: return "call stack exhausted";
    case TrapKind::host: return "host error";
  }
  return "trap";
}

}  // namespace watz::wasm
