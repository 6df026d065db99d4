#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <new>

#include "opcodes.hpp"
#include "watz/wasm/instance.hpp"

static_assert(std::endian::native == std::endian::little, "linear memory access assumes a little-endian host");

namespace watz::wasm {

// ---------------------------------------------------------------------------
// Memory

Memory::Memory(std::uint32_t pages, std::uint32_t max_pages)
    : bytes_(std::size_t(pages) * kPageSize), pages_(pages), max_pages_(max_pages) {}

std::int32_t Memory::grow(std::uint32_t delta) {
  std::uint32_t old = pages_;
  if (delta > max_pages_ || old + delta > max_pages_) return -1;
  try {
    bytes_.resize(std::size_t(old + delta) * kPageSize);
  } catch (const std::bad_alloc&) {
    return -1;
  }
  pages_ = old + delta;
  return static_cast<std::int32_t>(old);
}

std::optional<std::span<std::uint8_t>> Memory::view(std::uint64_t offset, std::uint64_t length) {
  if (!in_bounds(offset, length)) return std::nullopt;
  return std::span<std::uint8_t>(bytes_.data() + offset, length);
}

// ---------------------------------------------------------------------------
// Linker

void Linker::define(std::string module, std::string name, FuncType type, HostFunction fn) {
  entries_[{std::move(module), std::move(name)}] = Entry{std::move(type), std::move(fn)};
}

void Linker::define_fallback(std::string module, Fallback fallback) {
  fallbacks_[std::move(module)] = std::move(fallback);
}

HostFunction Linker::resolve(const Import& import, const FuncType& type) const {
  const std::string what = import.module + "." + import.name;
  auto it = entries_.find({import.module, import.name});
  if (it != entries_.end()) {
    if (it->second.type != type) {
      throw LinkError("incompatible import type for " + what + ": module expects " + to_string(type) +
                      ", host provides " + to_string(it->second.type));
    }
    return it->second.fn;
  }
  auto fb = fallbacks_.find(import.module);
  if (fb != fallbacks_.end()) {
    if (auto fn = fb->second(import.name, type)) return *fn;
  }
  throw LinkError("unknown import " + what);
}

// ---------------------------------------------------------------------------
// Instance

Instance::Instance(std::shared_ptr<const Module> module) : module_(std::move(module)) {}

std::unique_ptr<Instance> Instance::instantiate(std::shared_ptr<const Module> module, const Linker& linker,
                                               void* host_data) {
  std::unique_ptr<Instance> inst(new Instance(std::move(module)));
  inst->host_data = host_data;
  const Module& m = *inst->module_;

  for (const Import& imp : m.imports) {
    inst->host_functions_.push_back(linker.resolve(imp, m.types[imp.type_index]));
  }

  if (m.memory) {
    if (m.memory->min > kMaxMemoryPages) {
      throw LinkError("memory minimum of " + std::to_string(m.memory->min) + " pages exceeds the host limit");
    }
    std::uint32_t max = std::min(m.memory->max.value_or(65536), kMaxMemoryPages);
    inst->memory_.emplace(m.memory->min, max);
  }

  for (const Global& g : m.globals) inst->globals_.push_back(g.init);

  if (m.table) {
    if (m.table->min > (1u << 20)) throw LinkError("table too large");
    inst->table_.resize(m.table->min);
  }
  for (const ElemSegment& seg : m.elements) {
    if (std::uint64_t(seg.offset) + seg.functions.size() > inst->table_.size()) {
      throw LinkError("elements segment does not fit");
    }
    for (std::size_t i = 0; i < seg.functions.size(); ++i) inst->table_[seg.offset + i] = seg.functions[i];
  }
  for (const DataSegment& seg : m.data) {
    if (!seg.active) continue;
    if (!inst->memory_->in_bounds(seg.offset, seg.bytes.size())) throw LinkError("data segment does not fit");
    if (!seg.bytes.empty()) std::memcpy(inst->memory_->data() + seg.offset, seg.bytes.data(), seg.bytes.size());
  }

  inst->stack_.resize(kStackSlots);
  if (m.start) inst->invoke_index(*m.start, {});
  return inst;
}

bool Instance::has_function(std::string_view export_name) const {
  return module_->find_export(export_name, ExternKind::func) != nullptr;
}

std::vector<std::uint64_t> Instance::invoke(std::string_view export_name, std::span<const std::uint64_t> args) {
  const Export* e = module_->find_export(export_name, ExternKind::func);
  if (!e) throw LinkError("missing export " + std::string(export_name));
  return invoke_index(e->index, args);
}

std::vector<std::uint64_t> Instance::invoke_index(std::uint32_t func_index, std::span<const std::uint64_t> args) {
  const Module& m = *module_;
  if (func_index >= m.function_count()) throw LinkError("unknown function index");
  const FuncType& type = m.function_type(func_index);
  if (args.size() != type.params.size()) throw LinkError("argument count mismatch for " + to_string(type));
  if (running_) throw std::logic_error("re-entrant call into a running instance");

  struct Guard {
    bool& flag;
    ~Guard() { flag = false; }
  } guard{running_};
  running_ = true;

  std::vector<std::uint64_t> results(type.results.size());
  if (func_index < m.imports.size()) {
    host_functions_[func_index](*this, args, results);
    return results;
  }
  std::copy(args.begin(), args.end(), stack_.begin());
  execute(func_index);
  std::copy_n(stack_.begin(), results.size(), results.begin());
  return results;
}

namespace {

struct Frame {
  const Function* fn;
  std::uint32_t pc;
  std::size_t fp;    // first local slot
  std::size_t base;  // first operand slot
};

inline float f32_of(std::uint64_t v) { return std::bit_cast<float>(static_cast<std::uint32_t>(v)); }
inline double f64_of(std::uint64_t v) { return std::bit_cast<double>(v); }
inline std::uint64_t bits(float f) { return std::bit_cast<std::uint32_t>(f); }
inline std::uint64_t bits(double d) { return std::bit_cast<std::uint64_t>(d); }

template <class F>
F wasm_min(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? a : b;
  return a < b ? a : b;
}

template <class F>
F wasm_max(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

// Range checks are done in double, which represents every f32 exactly and
// every bound used here exactly.
template <class I>
bool in_trunc_range(double x) {
  if constexpr (std::is_same_v<I, std::int32_t>) return x > -2147483649.0 && x < 2147483648.0;
  if constexpr (std::is_same_v<I, std::uint32_t>) return x > -1.0 && x < 4294967296.0;
  if constexpr (std::is_same_v<I, std::int64_t>) return x >= -9223372036854775808.0 && x < 9223372036854775808.0;
  if constexpr (std::is_same_v<I, std::uint64_t>) return x > -1.0 && x < 18446744073709551616.0;
}

template <class I>
I trunc_checked(double x) {
  if (std::isnan(x)) throw Trap(TrapKind::invalid_conversion);
  if (!in_trunc_range<I>(x)) throw Trap(TrapKind::integer_overflow);
  return static_cast<I>(x);
}

template <class I>
I trunc_saturating(double x) {
  if (std::isnan(x)) return 0;
  if (!in_trunc_range<I>(x)) return x < 0 ? std::numeric_limits<I>::min() : std::numeric_limits<I>::max();
  return static_cast<I>(x);
}

inline std::uint64_t as_i32(std::int64_t v) { return static_cast<std::uint32_t>(v); }

}  // namespace

void Instance::execute(std::uint32_t entry) {
  const Module& m = *module_;
  const auto n_imports = static_cast<std::uint32_t>(m.imports.size());
  std::uint64_t* S = stack_.data();
  const std::size_t capacity = stack_.size();

  std::vector<Frame> frames;
  frames.reserve(64);

  std::size_t sp = m.function_type(entry).params.size();
  const Function* fn = nullptr;
  const Instr* code = nullptr;
  std::uint32_t pc = 0;
  std::size_t fp = 0;
  std::size_t base = 0;

  // Calls function `idx` whose arguments are on top of the stack.
  auto call = [&](std::uint32_t idx) {
    const FuncType& type = m.function_type(idx);
    const std::size_t np = type.params.size();
    if (idx < n_imports) {
      std::uint64_t results[16];
      std::vector<std::uint64_t> big;
      std::span<std::uint64_t> out(results, type.results.size());
      if (type.results.size() > 16) {
        big.resize(type.results.size());
        out = big;
      }
      std::span<const std::uint64_t> in(S + sp - np, np);
      host_functions_[idx](*this, in, out);
      sp -= np;
      for (std::uint64_t v : out) S[sp++] = v;
      return;
    }
    if (frames.size() >= kMaxCallDepth) throw Trap(TrapKind::call_stack_exhausted);
    const Function& callee = m.functions[idx - n_imports];
    std::size_t new_fp = sp - np;
    std::size_t new_base = sp + callee.locals.size();
    if (new_base + callee.max_height > capacity) throw Trap(TrapKind::call_stack_exhausted);
    std::fill(S + sp, S + new_base, 0);
    if (fn) frames.back().pc = pc;
    frames.push_back(Frame{&callee, 0, new_fp, new_base});
    fn = &callee;
    code = callee.code.data();
    pc = 0;
    fp = new_fp;
    base = new_base;
    sp = new_base;
  };

  call(entry);
  if (!fn) return;  // host function entry, already complete

  auto mem_at = [&](std::uint64_t addr, std::uint64_t size) -> std::uint8_t* {
    if (!memory_ || !memory_->in_bounds(addr, size)) throw Trap(TrapKind::memory_out_of_bounds);
    return memory_->data() + addr;
  };

#define POP() S[--sp]
#define TOP S[sp - 1]
#define I32(x) static_cast<std::uint32_t>(x)
#define S32(x) static_cast<std::int32_t>(static_cast<std::uint32_t>(x))
#define S64(x) static_cast<std::int64_t>(x)

#define BIN_I32(expr)                    \
  {                                      \
    std::uint32_t b = I32(POP());        \
    std::uint32_t a = I32(TOP);          \
    TOP = static_cast<std::uint32_t>(expr); \
    break;                               \
  }
#define BIN_I64(expr)                    \
  {                                      \
    std::uint64_t b = POP();             \
    std::uint64_t a = TOP;               \
    TOP = static_cast<std::uint64_t>(expr); \
    break;                               \
  }
#define CMP_I64(expr)                    \
  {                                      \
    std::uint64_t b = POP();             \
    std::uint64_t a = TOP;               \
    TOP = (expr) ? 1u : 0u;              \
    break;                               \
  }
#define BIN_F32(expr)                    \
  {                                      \
    float b = f32_of(POP());             \
    float a = f32_of(TOP);               \
    TOP = bits(static_cast<float>(expr)); \
    break;                               \
  }
#define BIN_F64(expr)                    \
  {                                      \
    double b = f64_of(POP());            \
    double a = f64_of(TOP);              \
    TOP = bits(static_cast<double>(expr)); \
    break;                               \
  }
#define CMP_F32(expr)                    \
  {                                      \
    float b = f32_of(POP());             \
    float a = f32_of(TOP);               \
    TOP = (expr) ? 1u : 0u;              \
    break;                               \
  }
#define CMP_F64(expr)                    \
  {                                      \
    double b = f64_of(POP());            \
    double a = f64_of(TOP);              \
    TOP = (expr) ? 1u : 0u;              \
    break;                               \
  }
#define UN_F32(expr)                     \
  {                                      \
    float a = f32_of(TOP);               \
    TOP = bits(static_cast<float>(expr)); \
    break;                               \
  }
#define UN_F64(expr)                     \
  {                                      \
    double a = f64_of(TOP);              \
    TOP = bits(static_cast<double>(expr)); \
    break;                               \
  }
#define LOAD(T, convert)                                          \
  {                                                               \
    std::uint64_t addr = std::uint64_t(I32(TOP)) + in.a;          \
    T v;                                                          \
    std::memcpy(&v, mem_at(addr, sizeof(T)), sizeof(T));          \
    TOP = convert;                                                \
    break;                                                        \
  }
#define STORE(T)                                                  \
  {                                                               \
    T v = static_cast<T>(POP());                                  \
    std::uint64_t addr = std::uint64_t(I32(POP())) + in.a;        \
    std::memcpy(mem_at(addr, sizeof(T)), &v, sizeof(T));          \
    break;                                                        \
  }

  for (;;) {
    const Instr& in = code[pc++];
    switch (in.op) {
      case 0x00:
        throw Trap(TrapKind::unreachable);

      case 0x04:  // if: jump to the else arm or end when the condition is zero
        if (I32(POP()) == 0) pc = in.a;
        break;
      case op::kJump:
        pc = in.a;
        break;

      case 0x0D:  // br_if
        if (I32(POP()) == 0) break;
        [[fallthrough]];
      case 0x0C: {
        std::size_t dest = base + in.c;
        if (in.b && dest != sp - in.b) std::memmove(S + dest, S + sp - in.b, in.b * sizeof(std::uint64_t));
        sp = dest + in.b;
        pc = in.a;
        break;
      }
      case 0x0E: {
        std::uint32_t i = I32(POP());
        const BranchTarget& t = fn->branch_tables[in.a + std::min(i, in.b)];
        std::size_t dest = base + t.height;
        if (t.arity && dest != sp - t.arity) std::memmove(S + dest, S + sp - t.arity, t.arity * sizeof(std::uint64_t));
        sp = dest + t.arity;
        pc = t.pc;
        break;
      }
      case 0x0F: {
        if (in.b && fp != sp - in.b) std::memmove(S + fp, S + sp - in.b, in.b * sizeof(std::uint64_t));
        sp = fp + in.b;
        frames.pop_back();
        if (frames.empty()) return;
        const Frame& f = frames.back();
        fn = f.fn;
        code = fn->code.data();
        pc = f.pc;
        fp = f.fp;
        base = f.base;
        break;
      }
      case 0x10:
        call(in.a);
        break;
      case 0x11: {
        std::uint32_t i = I32(POP());
        if (i >= table_.size()) throw Trap(TrapKind::undefined_element);
        if (!table_[i]) throw Trap(TrapKind::uninitialized_element);
        if (m.function_type(*table_[i]) != m.types[in.a]) throw Trap(TrapKind::indirect_call_type_mismatch);
        call(*table_[i]);
        break;
      }

      case 0x1A:
        --sp;
        break;
      case 0x1B: {
        std::uint32_t c = I32(POP());
        std::uint64_t b = POP();
        if (!c) TOP = b;
        break;
      }

      case 0x20: S[sp++] = S[fp + in.a]; break;
      case 0x21: S[fp + in.a] = POP(); break;
      case 0x22: S[fp + in.a] = TOP; break;
      case 0x23: S[sp++] = globals_[in.a]; break;
      case 0x24: globals_[in.a] = POP(); break;

      case 0x28: LOAD(std::uint32_t, v)
      case 0x29: LOAD(std::uint64_t, v)
      case 0x2A: LOAD(std::uint32_t, v)
      case 0x2B: LOAD(std::uint64_t, v)
      case 0x2C: LOAD(std::int8_t, as_i32(v))
      case 0x2D: LOAD(std::uint8_t, v)
      case 0x2E: LOAD(std::int16_t, as_i32(v))
      case 0x2F: LOAD(std::uint16_t, v)
      case 0x30: LOAD(std::int8_t, static_cast<std::uint64_t>(std::int64_t{v}))
      case 0x31: LOAD(std::uint8_t, v)
      case 0x32: LOAD(std::int16_t, static_cast<std::uint64_t>(std::int64_t{v}))
      case 0x33: LOAD(std::uint16_t, v)
      case 0x34: LOAD(std::int32_t, static_cast<std::uint64_t>(std::int64_t{v}))
      case 0x35: LOAD(std::uint32_t, v)
      case 0x36: STORE(std::uint32_t)
      case 0x37: STORE(std::uint64_t)
      case 0x38: STORE(std::uint32_t)
      case 0x39: STORE(std::uint64_t)
      case 0x3A: STORE(std::uint8_t)
      case 0x3B: STORE(std::uint16_t)
      case 0x3C: STORE(std::uint8_t)
      case 0x3D: STORE(std::uint16_t)
      case 0x3E: STORE(std::uint32_t)
      case 0x3F: S[sp++] = memory_->pages(); break;
      case 0x40: TOP = as_i32(memory_->grow(I32(TOP))); break;

      case 0x41:
      case 0x42:
      case 0x43:
      case 0x44:
        S[sp++] = in.c;
        break;

      case 0x45: TOP = I32(TOP) == 0; break;
      case 0x46: BIN_I32(a == b)
      case 0x47: BIN_I32(a != b)
      case 0x48: BIN_I32(S32(a) < S32(b))
      case 0x49: BIN_I32(a < b)
      case 0x4A: BIN_I32(S32(a) > S32(b))
      case 0x4B: BIN_I32(a > b)
      case 0x4C: BIN_I32(S32(a) <= S32(b))
      case 0x4D: BIN_I32(a <= b)
      case 0x4E: BIN_I32(S32(a) >= S32(b))
      case 0x4F: BIN_I32(a >= b)
      case 0x50: TOP = TOP == 0; break;
      case 0x51: CMP_I64(a == b)
      case 0x52: CMP_I64(a != b)
      case 0x53: CMP_I64(S64(a) < S64(b))
      case 0x54: CMP_I64(a < b)
      case 0x55: CMP_I64(S64(a) > S64(b))
      case 0x56: CMP_I64(a > b)
      case 0x57: CMP_I64(S64(a) <= S64(b))
      case 0x58: CMP_I64(a <= b)
      case 0x59: CMP_I64(S64(a) >= S64(b))
      case 0x5A: CMP_I64(a >= b)
      case 0x5B: CMP_F32(a == b)
      case 0x5C: CMP_F32(a != b)
      case 0x5D: CMP_F32(a < b)
      case 0x5E: CMP_F32(a > b)
      case 0x5F: CMP_F32(a <= b)
      case 0x60: CMP_F32(a >= b)
      case 0x61: CMP_F64(a == b)
      case 0x62: CMP_F64(a != b)
      case 0x63: CMP_F64(a < b)
      case 0x64: CMP_F64(a > b)
      case 0x65: CMP_F64(a <= b)
      case 0x66: CMP_F64(a >= b)

      case 0x67: TOP = std::countl_zero(I32(TOP)); break;
      case 0x68: TOP = std::countr_zero(I32(TOP)); break;
      case 0x69: TOP = std::popcount(I32(TOP)); break;
      case 0x6A: BIN_I32(a + b)
      case 0x6B: BIN_I32(a - b)
      case 0x6C: BIN_I32(a * b)
      case 0x6D: {
        std::int32_t b = S32(POP()), a = S32(TOP);
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        if (a == std::numeric_limits<std::int32_t>::min() && b == -1) throw Trap(TrapKind::integer_overflow);
        TOP = as_i32(a / b);
        break;
      }
      case 0x6E: {
        std::uint32_t b = I32(POP()), a = I32(TOP);
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        TOP = a / b;
        break;
      }
      case 0x6F: {
        std::int32_t b = S32(POP()), a = S32(TOP);
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        TOP = (b == -1) ? 0 : as_i32(a % b);
        break;
      }
      case 0x70: {
        std::uint32_t b = I32(POP()), a = I32(TOP);
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        TOP = a % b;
        break;
      }
      case 0x71: BIN_I32(a & b)
      case 0x72: BIN_I32(a | b)
      case 0x73: BIN_I32(a ^ b)
      case 0x74: BIN_I32(a << (b & 31))
      case 0x75: BIN_I32(S32(a) >> (b & 31))
      case 0x76: BIN_I32(a >> (b & 31))
      case 0x77: BIN_I32(std::rotl(a, static_cast<int>(b & 31)))
      case 0x78: BIN_I32(std::rotr(a, static_cast<int>(b & 31)))

      case 0x79: TOP = static_cast<std::uint64_t>(std::countl_zero(TOP)); break;
      case 0x7A: TOP = static_cast<std::uint64_t>(std::countr_zero(TOP)); break;
      case 0x7B: TOP = static_cast<std::uint64_t>(std::popcount(TOP)); break;
      case 0x7C: BIN_I64(a + b)
      case 0x7D: BIN_I64(a - b)
      case 0x7E: BIN_I64(a * b)
      case 0x7F: {
        std::int64_t b = S64(POP()), a = S64(TOP);
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        if (a == std::numeric_limits<std::int64_t>::min() && b == -1) throw Trap(TrapKind::integer_overflow);
        TOP = static_cast<std::uint64_t>(a / b);
        break;
      }
      case 0x80: {
        std::uint64_t b = POP(), a = TOP;
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        TOP = a / b;
        break;
      }
      case 0x81: {
        std::int64_t b = S64(POP()), a = S64(TOP);
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        TOP = (b == -1) ? 0 : static_cast<std::uint64_t>(a % b);
        break;
      }
      case 0x82: {
        std::uint64_t b = POP(), a = TOP;
        if (b == 0) throw Trap(TrapKind::integer_divide_by_zero);
        TOP = a % b;
        break;
      }
      case 0x83: BIN_I64(a & b)
      case 0x84: BIN_I64(a | b)
      case 0x85: BIN_I64(a ^ b)
      case 0x86: BIN_I64(a << (b & 63))
      case 0x87: BIN_I64(S64(a) >> (b & 63))
      case 0x88: BIN_I64(a >> (b & 63))
      case 0x89: BIN_I64(std::rotl(a, static_cast<int>(b & 63)))
      case 0x8A: BIN_I64(std::rotr(a, static_cast<int>(b & 63)))

      case 0x8B: TOP = I32(TOP) & 0x7fffffffu; break;
      case 0x8C: TOP = I32(TOP) ^ 0x80000000u; break;
      case 0x8D: UN_F32(std::ceil(a))
      case 0x8E: UN_F32(std::floor(a))
      case 0x8F: UN_F32(std::trunc(a))
      case 0x90: UN_F32(std::nearbyint(a))
      case 0x91: UN_F32(std::sqrt(a))
      case 0x92: BIN_F32(a + b)
      case 0x93: BIN_F32(a - b)
      case 0x94: BIN_F32(a * b)
      case 0x95: BIN_F32(a / b)
      case 0x96: BIN_F32(wasm_min(a, b))
      case 0x97: BIN_F32(wasm_max(a, b))
      case 0x98: {
        std::uint32_t b = I32(POP());
        TOP = (I32(TOP) & 0x7fffffffu) | (b & 0x80000000u);
        break;
      }
      case 0x99: TOP &= 0x7fffffffffffffffull; break;
      case 0x9A: TOP ^= 0x8000000000000000ull; break;
      case 0x9B: UN_F64(std::ceil(a))
      case 0x9C: UN_F64(std::floor(a))
      case 0x9D: UN_F64(std::trunc(a))
      case 0x9E: UN_F64(std::nearbyint(a))
      case 0x9F: UN_F64(std::sqrt(a))
      case 0xA0: BIN_F64(a + b)
      case 0xA1: BIN_F64(a - b)
      case 0xA2: BIN_F64(a * b)
      case 0xA3: BIN_F64(a / b)
      case 0xA4: BIN_F64(wasm_min(a, b))
      case 0xA5: BIN_F64(wasm_max(a, b))
      case 0xA6: {
        std::uint64_t b = POP();
        TOP = (TOP & 0x7fffffffffffffffull) | (b & 0x8000000000000000ull);
        break;
      }

      case 0xA7: TOP = I32(TOP); break;
      case 0xA8: TOP = as_i32(trunc_checked<std::int32_t>(f32_of(TOP))); break;
      case 0xA9: TOP = trunc_checked<std::uint32_t>(f32_of(TOP)); break;
      case 0xAA: TOP = as_i32(trunc_checked<std::int32_t>(f64_of(TOP))); break;
      case 0xAB: TOP = trunc_checked<std::uint32_t>(f64_of(TOP)); break;
      case 0xAC: TOP = static_cast<std::uint64_t>(std::int64_t{S32(TOP)}); break;
      case 0xAD: TOP = I32(TOP); break;
      case 0xAE: TOP = static_cast<std::uint64_t>(trunc_checked<std::int64_t>(f32_of(TOP))); break;
      case 0xAF: TOP = trunc_checked<std::uint64_t>(f32_of(TOP)); break;
      case 0xB0: TOP = static_cast<std::uint64_t>(trunc_checked<std::int64_t>(f64_of(TOP))); break;
      case 0xB1: TOP = trunc_checked<std::uint64_t>(f64_of(TOP)); break;
      case 0xB2: TOP = bits(static_cast<float>(S32(TOP))); break;
      case 0xB3: TOP = bits(static_cast<float>(I32(TOP))); break;
      case 0xB4: TOP = bits(static_cast<float>(S64(TOP))); break;
      case 0xB5: TOP = bits(static_cast<float>(TOP)); break;
      case 0xB6: TOP = bits(static_cast<float>(f64_of(TOP))); break;
      case 0xB7: TOP = bits(static_cast<double>(S32(TOP))); break;
      case 0xB8: TOP = bits(static_cast<double>(I32(TOP))); break;
      case 0xB9: TOP = bits(static_cast<double>(S64(TOP))); break;
      case 0xBA: TOP = bits(static_cast<double>(TOP)); break;
      case 0xBB: TOP = bits(static_cast<double>(f32_of(TOP))); break;
      case 0xBC:
      case 0xBD:
      case 0xBE:
      case 0xBF:
        break;  // reinterpretations keep the bit pattern
      case 0xC0: TOP = as_i32(static_cast<std::int8_t>(TOP)); break;
      case 0xC1: TOP = as_i32(static_cast<std::int16_t>(TOP)); break;
      case 0xC2: TOP = static_cast<std::uint64_t>(std::int64_t{static_cast<std::int8_t>(TOP)}); break;
      case 0xC3: TOP = static_cast<std::uint64_t>(std::int64_t{static_cast<std::int16_t>(TOP)}); break;
      case 0xC4: TOP = static_cast<std::uint64_t>(std::int64_t{static_cast<std::int32_t>(TOP)}); break;

      case op::kPrefixFC | 0: TOP = as_i32(trunc_saturating<std::int32_t>(f32_of(TOP))); break;
      case op::kPrefixFC | 1: TOP = trunc_saturating<std::uint32_t>(f32_of(TOP)); break;
      case op::kPrefixFC | 2: TOP = as_i32(trunc_saturating<std::int32_t>(f64_of(TOP))); break;
      case op::kPrefixFC | 3: TOP = trunc_saturating<std::uint32_t>(f64_of(TOP)); break;
      case op::kPrefixFC | 4: TOP = static_cast<std::uint64_t>(trunc_saturating<std::int64_t>(f32_of(TOP))); break;
      case op::kPrefixFC | 5: TOP = trunc_saturating<std::uint64_t>(f32_of(TOP)); break;
      case op::kPrefixFC | 6: TOP = static_cast<std::uint64_t>(trunc_saturating<std::int64_t>(f64_of(TOP))); break;
      case op::kPrefixFC | 7: TOP = trunc_saturating<std::uint64_t>(f64_of(TOP)); break;
      case op::kPrefixFC | 10: {
        std::uint64_t n = I32(POP()), src = I32(POP()), dst = I32(POP());
        if (!memory_->in_bounds(src, n) || !memory_->in_bounds(dst, n)) throw Trap(TrapKind::memory_out_of_bounds);
        if (n) std::memmove(memory_->data() + dst, memory_->data() + src, n);
        break;
      }
      case op::kPrefixFC | 11: {
        std::uint64_t n = I32(POP());
        auto value = static_cast<std::uint8_t>(POP());
        std::uint64_t dst = I32(POP());
        if (!memory_->in_bounds(dst, n)) throw Trap(TrapKind::memory_out_of_bounds);
        if (n) std::memset(memory_->data() + dst, value, n);
        break;
      }

      default:
        throw Trap(TrapKind::host, "internal error: unknown compiled opcode");
    }
  }

#undef POP
#undef TOP
#undef I32
#undef S32
#undef S64
#undef BIN_I32
#undef BIN_I64
#undef CMP_I64
#undef BIN_F32
#undef BIN_F64
#undef CMP_F32
#undef CMP_F64
#undef UN_F32
#undef UN_F64
#undef LOAD
#undef STORE
}

}  // namespace watz::wasm
