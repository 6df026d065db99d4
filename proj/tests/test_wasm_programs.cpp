// Whole-program behaviour against reference results from an independent
// engine. Each program runs twice: once from the reference engine's own
// binary encoding and once from this project's assembler.

#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "watz/wasm/instance.hpp"
#include "watz/wasm/wat.hpp"

using namespace watz::wasm;
using nlohmann::json;

namespace {

json programs() {
  std::ifstream in(WATZ_TEST_DATA "/wasm_programs.json");
  return json::parse(in);
}

void run_calls(Instance& inst, const json& program, const std::string& variant) {
  for (const json& call : program["calls"]) {
    std::vector<std::uint64_t> args = call["args"].get<std::vector<std::uint64_t>>();
    std::string where = variant + " " + program["name"].get<std::string>() + "/" + call["func"].get<std::string>() +
                        " " + call["args"].dump();
    if (call.contains("trap")) {
      try {
        inst.invoke(call["func"].get<std::string>(), args);
        ADD_FAILURE() << where << ": expected trap " << call["trap"];
      } catch (const Trap& t) {
        EXPECT_EQ(std::string(to_string(t.kind())), call["trap"].get<std::string>()) << where;
      }
    } else {
      std::vector<std::uint64_t> got;
      try {
        got = inst.invoke(call["func"].get<std::string>(), args);
      } catch (const std::exception& e) {
        ADD_FAILURE() << where << ": unexpected " << e.what();
        continue;
      }
      auto want = call["results"].get<std::vector<std::uint64_t>>();
      const FuncType& ft = inst.module().function_type(
          inst.module().find_export(call["func"].get<std::string>(), ExternKind::func)->index);
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (ft.results[i] == ValType::i32 || ft.results[i] == ValType::f32) got[i] &= 0xffffffffu;
      }
      EXPECT_EQ(got, want) << where;
    }
  }
}

}  // namespace

TEST(WasmPrograms, ReferenceBinaries) {
  for (const json& p : programs()) {
    auto module = load_module(watz::from_hex(p["binary"].get<std::string>()));
    auto inst = Instance::instantiate(module, Linker{});
    run_calls(*inst, p, "reference-binary");
  }
}

TEST(WasmPrograms, AssembledFromText) {
  for (const json& p : programs()) {
    auto module = load_module(assemble_wat(p["wat"].get<std::string>()));
    auto inst = Instance::instantiate(module, Linker{});
    run_calls(*inst, p, "assembled");
  }
}

namespace {

// Drops custom sections (id 0), which carry only debug names.
watz::Bytes strip_custom_sections(const watz::Bytes& in) {
  watz::Bytes out(in.begin(), in.begin() + 8);
  std::size_t pos = 8;
  while (pos < in.size()) {
    std::size_t start = pos;
    std::uint8_t id = in[pos++];
    std::uint32_t size = 0;
    int shift = 0;
    std::uint8_t b;
    do {
      b = in[pos++];
      size |= std::uint32_t(b & 0x7f) << shift;
      shift += 7;
    } while (b & 0x80);
    pos += size;
    if (id != 0) out.insert(out.end(), in.begin() + start, in.begin() + pos);
  }
  return out;
}

}  // namespace

TEST(WasmPrograms, AssemblerMatchesReferenceEncoding) {
  for (const json& p : programs()) {
    watz::Bytes reference = strip_custom_sections(watz::from_hex(p["binary"].get<std::string>()));
    EXPECT_EQ(watz::to_hex(assemble_wat(p["wat"].get<std::string>())), watz::to_hex(reference)) << p["name"];
  }
}
