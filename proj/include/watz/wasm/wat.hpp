#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "watz/bytes.hpp"

namespace watz::wasm {

class WatError : public std::runtime_error {
 public:
  WatError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Assembles the WebAssembly text format into a binary module. Covers the
/// subset this engine executes: function imports, one memory, one funcref
/// table, globals, active data and element segments, flat and folded code.
Bytes assemble_wat(std::string_view text);

}  // namespace watz::wasm
