// Every numeric instruction against reference results produced by an
// independent engine (see oracles/wasm_numeric_oracle.py).

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "../src/wasm/opcodes.hpp"
#include "watz/wasm/instance.hpp"
#include "watz/wasm/wat.hpp"

using namespace watz::wasm;

namespace {

struct Vector {
  std::vector<std::uint64_t> args;
  std::string expected;
};

std::map<std::string, std::vector<Vector>> load_vectors() {
  std::ifstream in(WATZ_TEST_DATA "/wasm_numeric_vectors.txt");
  std::map<std::string, std::vector<Vector>> out;
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(" : ");
    std::istringstream lhs(line.substr(0, colon));
    std::string name, tok;
    lhs >> name;
    Vector v;
    while (lhs >> tok) v.args.push_back(std::stoull(tok, nullptr, 16));
    v.expected = line.substr(colon + 3);
    out[name].push_back(std::move(v));
  }
  return out;
}

std::string carrier(char c) { return (c == 'i' || c == 'f') ? "i32" : "i64"; }

std::string wrapper(std::string_view name, std::string_view ins, char out) {
  std::string params, body;
  for (std::size_t k = 0; k < ins.size(); ++k) {
    params += "(param " + carrier(ins[k]) + ") ";
    body += "local.get " + std::to_string(k) + " ";
    if (ins[k] == 'f') body += "f32.reinterpret_i32 ";
    if (ins[k] == 'F') body += "f64.reinterpret_i64 ";
  }
  body += std::string(name) + " ";
  if (out == 'f') body += "i32.reinterpret_f32";
  if (out == 'F') body += "i64.reinterpret_f64";
  return "(module (func (export \"f\") " + params + "(result " + carrier(out) + ") " + body + "))";
}

bool is_nan(std::uint64_t bits, char t) {
  if (t == 'f') return (bits & 0x7f800000u) == 0x7f800000u && (bits & 0x7fffffu);
  if (t == 'F') return (bits & 0x7ff0000000000000ull) == 0x7ff0000000000000ull && (bits & 0xfffffffffffffull);
  return false;
}

}  // namespace

TEST(WasmNumeric, MatchesReferenceEngine) {
  auto vectors = load_vectors();
  ASSERT_GT(vectors.size(), 130u) << "vector file missing or truncated";
  std::size_t checked = 0;
  for (auto& [name, cases] : vectors) {
    const op::Info* info = op::by_name(name);
    ASSERT_NE(info, nullptr) << name;
    std::string_view sig = info->sig;
    auto colon = sig.find(':');
    std::string_view ins = sig.substr(0, colon);
    char out = sig[colon + 1];
    auto module = load_module(assemble_wat(wrapper(name, ins, out)));
    auto inst = Instance::instantiate(module, Linker{});
    for (const Vector& v : cases) {
      std::vector<std::uint64_t> args = v.args;
      std::string got;
      try {
        std::uint64_t r = inst->invoke("f", args).at(0);
        if (out == 'i' || out == 'f') r &= 0xffffffffu;
        std::ostringstream hex;
        hex << std::hex << r;
        got = is_nan(r, out) ? "nan" : hex.str();
      } catch (const Trap& t) {
        got = std::string("trap ") + to_string(t.kind());
      }
      std::ostringstream desc;
      desc << name;
      for (auto a : v.args) desc << ' ' << std::hex << a;
      EXPECT_EQ(got, v.expected) << desc.str();
      ++checked;
    }
  }
  EXPECT_GT(checked, 25000u);
}
