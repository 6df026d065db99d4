#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace watz::wasm {

enum class ValType : std::uint8_t { i32 = 0x7f, i64 = 0x7e, f32 = 0x7d, f64 = 0x7c };

const char* to_string(ValType t) noexcept;

struct FuncType {
  std::vector<ValType> params;
  std::vector<ValType> results;

  friend bool operator==(const FuncType&, const FuncType&) = default;
};

std::string to_string(const FuncType& type);

/// Malformed binary or a module that fails validation.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unresolvable or mistyped import, or a segment that does not fit.
class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrapKind {
  unreachable,
  memory_out_of_bounds,
  integer_divide_by_zero,
  integer_overflow,
  invalid_conversion,
  undefined_element,
  uninitialized_element,
  indirect_call_type_mismatch,
  call_stack_exhausted,
  host,
};

const char* to_string(TrapKind kind) noexcept;

class Trap : public std::runtime_error {
 public:
  Trap(TrapKind kind, const std::string& detail)
      : std::runtime_error(detail.empty() ? std::string(to_string(kind))
                                          : std::string(to_string(kind)) + ": " + detail),
        kind_(kind) {}
  explicit Trap(TrapKind kind) : Trap(kind, {}) {}
  TrapKind kind() const noexcept { return kind_; }

 private:
  TrapKind kind_;
};

inline constexpr std::uint32_t kPageSize = 65536;

}  // namespace watz::wasm
