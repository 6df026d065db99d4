#include "opcodes.hpp"

#include <array>
#include <string>
#include <unordered_map>

namespace watz::wasm::op {

namespace {

struct Index {
  std::array<const Info*, 256> plain{};
  std::array<const Info*, 32> prefixed{};
  std::unordered_map<std::string_view, const Info*> names;

  Index() {
    for (const Info& info : kTable) {
      if (info.code >= kPrefixFC) {
        prefixed[info.code & 0xff] = &info;
      } else {
        plain[info.code] = &info;
      }
      names.emplace(info.name, &info);
    }
  }
};

const Index& index() {
  static const Index idx;
  return idx;
}

}  // namespace

const Info* by_code(std::uint16_t code) noexcept {
  const Index& idx = index();
  if (code >= kPrefixFC) {
    unsigned sub = code & 0xff;
    return (code >> 8) == 0xFC && sub < idx.prefixed.size() ? idx.prefixed[sub] : nullptr;
  }
  return code < 256 ? idx.plain[code] : nullptr;
}

const Info* by_name(std::string_view name) noexcept {
  const Index& idx = index();
  auto it = idx.names.find(name);
  return it == idx.names.end() ? nullptr : it->second;
}

}  // namespace watz::wasm::op
