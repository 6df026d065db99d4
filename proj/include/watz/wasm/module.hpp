#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "watz/bytes.hpp"
#include "watz/wasm/types.hpp"

namespace watz::wasm {

enum class ExternKind : std::uint8_t { func = 0, table = 1, memory = 2, global = 3 };

struct Limits {
  std::uint32_t min = 0;
  std::optional<std::uint32_t> max;
};

struct Import {
  std::string module;
  std::string name;
  std::uint32_t type_index = 0;  // only function imports are supported
};

struct Export {
  std::string name;
  ExternKind kind = ExternKind::func;
  std::uint32_t index = 0;
};

struct Global {
  ValType type = ValType::i32;
  bool mutable_ = false;
  std::uint64_t init = 0;  // bit pattern of the constant initializer
};

struct DataSegment {
  bool active = true;
  std::uint32_t offset = 0;
  Bytes bytes;
};

struct ElemSegment {
  std::uint32_t offset = 0;
  std::vector<std::uint32_t> functions;
};

// Compiled instruction. Structured control flow is resolved to absolute
// targets at validation time so the interpreter never scans for `end`.
struct Instr {
  std::uint16_t op = 0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint64_t c = 0;
};

struct BranchTarget {
  std::uint32_t pc = 0;
  std::uint32_t arity = 0;
  std::uint32_t height = 0;  // operand height above the locals to unwind to
};

struct Function {
  std::uint32_t type_index = 0;
  std::vector<ValType> locals;  // declared locals, params excluded
  std::uint32_t max_height = 0;
  std::vector<Instr> code;
  std::vector<BranchTarget> branch_tables;
};

struct Module {
  std::vector<FuncType> types;
  std::vector<Import> imports;
  std::vector<Function> functions;  // defined functions, after imports
  std::optional<Limits> table;
  std::optional<Limits> memory;
  std::vector<Global> globals;
  std::vector<Export> exports;
  std::optional<std::uint32_t> start;
  std::vector<ElemSegment> elements;
  std::vector<DataSegment> data;

  std::uint32_t function_count() const {
    return static_cast<std::uint32_t>(imports.size() + functions.size());
  }
  const FuncType& function_type(std::uint32_t index) const;
  const Export* find_export(std::string_view name, ExternKind kind) const;
};

/// Decodes and validates a binary module. Throws LoadError.
std::shared_ptr<const Module> load_module(ByteView binary);

// Upper bound on linear memory, in pages, regardless of what the module asks for.
inline constexpr std::uint32_t kMaxMemoryPages = 16384;  // 1 GiB

}  // namespace watz::wasm
