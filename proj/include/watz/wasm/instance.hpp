#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "watz/wasm/module.hpp"

namespace watz::wasm {

class Instance;

/// Host functions read their arguments and write their results as raw
/// 64-bit slots (i32 values live in the low half). They may throw Trap or
/// any other exception; both unwind the whole invocation.
using HostFunction =
    std::function<void(Instance&, std::span<const std::uint64_t> args, std::span<std::uint64_t> results)>;

class Memory {
 public:
  Memory(std::uint32_t pages, std::uint32_t max_pages);

  std::uint32_t pages() const noexcept { return pages_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  std::uint8_t* data() noexcept { return bytes_.data(); }
  const std::uint8_t* data() const noexcept { return bytes_.data(); }

  /// Returns the previous size in pages, or -1 when the request exceeds the maximum.
  std::int32_t grow(std::uint32_t delta);

  bool in_bounds(std::uint64_t offset, std::uint64_t length) const noexcept {
    return offset <= bytes_.size() && length <= bytes_.size() - offset;
  }

  /// nullopt when [offset, offset+length) leaves linear memory.
  std::optional<std::span<std::uint8_t>> view(std::uint64_t offset, std::uint64_t length);

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint32_t pages_;
  std::uint32_t max_pages_;
};

class Linker {
 public:
  void define(std::string module, std::string name, FuncType type, HostFunction fn);

  /// Called for imports from `module` that have no explicit definition.
  /// Returning nullopt makes the import unresolved.
  using Fallback = std::function<std::optional<HostFunction>(const std::string& name, const FuncType& type)>;
  void define_fallback(std::string module, Fallback fallback);

  HostFunction resolve(const Import& import, const FuncType& type) const;  // throws LinkError

 private:
  struct Entry {
    FuncType type;
    HostFunction fn;
  };
  std::map<std::pair<std::string, std::string>, Entry> entries_;
  std::map<std::string, Fallback> fallbacks_;
};

class Instance {
 public:
  // Operand stack slots and nested call depth available to guest code.
  static constexpr std::size_t kStackSlots = 1 << 18;
  static constexpr std::size_t kMaxCallDepth = 10000;

  /// Resolves imports, applies segments and runs the start function.
  /// `host_data` is installed before the start function runs.
  static std::unique_ptr<Instance> instantiate(std::shared_ptr<const Module> module, const Linker& linker,
                                               void* host_data = nullptr);

  const Module& module() const noexcept { return *module_; }
  Memory* memory() noexcept { return memory_ ? &*memory_ : nullptr; }

  bool has_function(std::string_view export_name) const;

  /// Calls an exported function. Throws LinkError for a missing export or
  /// wrong argument count, Trap on a trap, or whatever a host function throws.
  std::vector<std::uint64_t> invoke(std::string_view export_name, std::span<const std::uint64_t> args = {});
  std::vector<std::uint64_t> invoke_index(std::uint32_t func_index, std::span<const std::uint64_t> args);

  std::uint64_t global(std::uint32_t index) const { return globals_.at(index); }

  /// Arbitrary per-instance data for host functions.
  void* host_data = nullptr;

 private:
  explicit Instance(std::shared_ptr<const Module> module);
  void execute(std::uint32_t func_index);

  std::shared_ptr<const Module> module_;
  std::vector<HostFunction> host_functions_;
  std::optional<Memory> memory_;
  std::vector<std::uint64_t> globals_;
  std::vector<std::optional<std::uint32_t>> table_;
  std::vector<std::uint64_t> stack_;
  bool running_ = false;
};

}  // namespace watz::wasm
