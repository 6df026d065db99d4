// Binary decoder and validator. Function bodies are type-checked with the
// usual operand/control stack algorithm and compiled into a flat Instr
// vector in the same pass.

#include <algorithm>
#include <cstring>
#include <set>
#include <string>

#include "opcodes.hpp"
#include "watz/wasm/module.hpp"

namespace watz::wasm {

namespace {

[[noreturn]] void fail(const std::string& what) { throw LoadError(what); }

class Reader {
 public:
  Reader(ByteView data, std::size_t base = 0) : data_(data), base_(base) {}

  bool done() const { return pos_ >= data_.size(); }
  std::size_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t u8() {
    if (pos_ >= data_.size()) fail("unexpected end at offset " + std::to_string(offset()));
    return data_[pos_++];
  }

  ByteView bytes(std::size_t n) {
    if (n > remaining()) fail("unexpected end at offset " + std::to_string(offset()));
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32() {
    std::uint64_t result = 0;
    for (int i = 0; i < 5; ++i) {
      std::uint8_t b = u8();
      result |= std::uint64_t(b & 0x7f) << (7 * i);
      if (!(b & 0x80)) {
        if (i == 4 && (b & 0x70)) fail("integer too large");
        return static_cast<std::uint32_t>(result);
      }
    }
    fail("integer representation too long");
  }

  std::int64_t signed_leb(int bits) {
    std::uint64_t result = 0;
    int shift = 0;
    const int max_bytes = (bits + 6) / 7;
    for (int i = 0; i < max_bytes; ++i) {
      std::uint8_t b = u8();
      if (i == max_bytes - 1) {
        // Unused high bits of the last byte must replicate the sign bit.
        int used = bits - 7 * i;
        std::uint8_t rest = static_cast<std::uint8_t>((b & 0x7f) >> (used - 1));
        std::uint8_t all = static_cast<std::uint8_t>(0x7f >> (used - 1));
        if (b & 0x80) fail("integer representation too long");
        if (rest != 0 && rest != all) fail("integer too large");
      }
      result |= std::uint64_t(b & 0x7f) << shift;
      shift += 7;
      if (!(b & 0x80)) {
        if (shift < 64 && (b & 0x40)) result |= ~std::uint64_t{0} << shift;
        return static_cast<std::int64_t>(result);
      }
    }
    fail("integer representation too long");
  }

  std::int32_t s32() { return static_cast<std::int32_t>(signed_leb(32)); }
  std::int64_t s64() { return signed_leb(64); }
  std::int64_t s33() { return signed_leb(33); }

  std::uint32_t fixed32() {
    ByteView b = bytes(4);
    std::uint32_t v;
    std::memcpy(&v, b.data(), 4);
    return v;
  }
  std::uint64_t fixed64() {
    ByteView b = bytes(8);
    std::uint64_t v;
    std::memcpy(&v, b.data(), 8);
    return v;
  }

  std::string name() {
    std::uint32_t n = u32();
    ByteView b = bytes(n);
    return std::string(b.begin(), b.end());
  }

  std::uint32_t count(std::size_t min_entry_bytes = 1) {
    std::uint32_t n = u32();
    if (std::size_t(n) * min_entry_bytes > remaining()) fail("vector length exceeds section size");
    return n;
  }

 private:
  ByteView data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

ValType read_valtype(Reader& r) {
  std::uint8_t b = r.u8();
  switch (b) {
    case 0x7f: case 0x7e: case 0x7d: case 0x7c:
      return static_cast<ValType>(b);
    default:
      fail("unsupported value type 0x" + to_hex(ByteView(&b, 1)));
  }
}

Limits read_limits(Reader& r, std::uint32_t ceiling, const char* what) {
  Limits lim;
  std::uint8_t flag = r.u8();
  if (flag > 1) fail(std::string("bad ") + what + " limits flag");
  lim.min = r.u32();
  if (flag == 1) lim.max = r.u32();
  if (lim.min > ceiling || (lim.max && *lim.max > ceiling))
    fail(std::string(what) + " size must be at most " + std::to_string(ceiling));
  if (lim.max && *lim.max < lim.min) fail(std::string(what) + " size minimum must not exceed maximum");
  return lim;
}

// Constant expression: a single const or global.get followed by end.
std::uint64_t read_const_expr(Reader& r, ValType expected) {
  std::uint8_t opcode = r.u8();
  std::uint64_t value = 0;
  ValType type;
  switch (opcode) {
    case 0x41: type = ValType::i32; value = static_cast<std::uint32_t>(r.s32()); break;
    case 0x42: type = ValType::i64; value = static_cast<std::uint64_t>(r.s64()); break;
    case 0x43: type = ValType::f32; value = r.fixed32(); break;
    case 0x44: type = ValType::f64; value = r.fixed64(); break;
    case 0x23: fail("global.get in constant expressions is not supported");
    default: fail("constant expression required");
  }
  if (r.u8() != 0x0B) fail("constant expression required");
  if (type != expected) fail("type mismatch in constant expression");
  return value;
}

// ---------------------------------------------------------------------------
// Function body compiler

constexpr std::uint8_t kUnknown = 0;

enum class CtrlKind : std::uint8_t { func, block, loop, if_, else_ };

struct Ctrl {
  CtrlKind kind;
  std::vector<ValType> params;
  std::vector<ValType> results;
  std::uint32_t height = 0;
  bool unreachable = false;
  std::uint32_t start_pc = 0;
  std::uint32_t if_instr = 0;
  std::vector<std::uint32_t> fixups;        // Instr indices whose `a` is the end pc
  std::vector<std::uint32_t> table_fixups;  // branch_tables indices
};

ValType sig_type(char c) {
  switch (c) {
    case 'i': return ValType::i32;
    case 'I': return ValType::i64;
    case 'f': return ValType::f32;
    default: return ValType::f64;
  }
}

class BodyCompiler {
 public:
  BodyCompiler(const Module& m, Function& fn, ByteView body, std::size_t base)
      : m_(m), fn_(fn), r_(body, base) {}

  void run() {
    const FuncType& type = m_.types[fn_.type_index];
    locals_ = type.params;
    std::uint32_t groups = r_.count();
    std::uint64_t total = 0;
    for (std::uint32_t g = 0; g < groups; ++g) {
      std::uint32_t n = r_.u32();
      total += n;
      if (total > 50000) fail("too many locals");
      ValType t = read_valtype(r_);
      fn_.locals.insert(fn_.locals.end(), n, t);
      locals_.insert(locals_.end(), n, t);
    }
    push_ctrl(CtrlKind::func, {}, type.results);
    while (!ctrls_.empty()) step();
    if (!r_.done()) fail("section size mismatch: trailing bytes after function end");
    fn_.max_height = max_height_;
  }

 private:
  [[noreturn]] void error(const std::string& what) {
    fail("function " + std::to_string(m_.imports.size() + (&fn_ - m_.functions.data())) +
         ": " + what + " at offset " + std::to_string(r_.offset()));
  }

  void push(std::uint8_t t) {
    vals_.push_back(t);
    max_height_ = std::max<std::uint32_t>(max_height_, static_cast<std::uint32_t>(vals_.size()));
  }
  void push(ValType t) { push(static_cast<std::uint8_t>(t)); }

  std::uint8_t pop() {
    Ctrl& c = ctrls_.back();
    if (vals_.size() == c.height) {
      if (c.unreachable) return kUnknown;
      error("type mismatch: operand stack underflow");
    }
    std::uint8_t t = vals_.back();
    vals_.pop_back();
    return t;
  }

  std::uint8_t pop(ValType expect) {
    std::uint8_t actual = pop();
    if (actual != kUnknown && actual != static_cast<std::uint8_t>(expect))
      error(std::string("type mismatch: expected ") + to_string(expect) + ", got " +
            to_string(static_cast<ValType>(actual)));
    return actual;
  }

  void pop_all(const std::vector<ValType>& types) {
    for (auto it = types.rbegin(); it != types.rend(); ++it) pop(*it);
  }

  void push_ctrl(CtrlKind kind, std::vector<ValType> params, std::vector<ValType> results) {
    Ctrl c;
    c.kind = kind;
    c.height = static_cast<std::uint32_t>(vals_.size());
    c.start_pc = pc();
    c.params = std::move(params);
    c.results = std::move(results);
    for (ValType t : c.params) push(t);
    ctrls_.push_back(std::move(c));
  }

  // Checks the block's results are on the stack and exactly so.
  void check_end(const Ctrl& c) {
    pop_all(c.results);
    if (vals_.size() != c.height) error("type mismatch: values remaining on stack at end of block");
  }

  void set_unreachable() {
    vals_.resize(ctrls_.back().height);
    ctrls_.back().unreachable = true;
  }

  std::uint32_t pc() const { return static_cast<std::uint32_t>(fn_.code.size()); }

  std::uint32_t emit(std::uint16_t op, std::uint32_t a = 0, std::uint32_t b = 0, std::uint64_t c = 0) {
    fn_.code.push_back(Instr{op, a, b, c});
    return pc() - 1;
  }

  Ctrl& label(std::uint32_t depth) {
    if (depth >= ctrls_.size()) error("unknown label " + std::to_string(depth));
    return ctrls_[ctrls_.size() - 1 - depth];
  }

  static const std::vector<ValType>& label_types(const Ctrl& c) {
    return c.kind == CtrlKind::loop ? c.params : c.results;
  }

  BranchTarget branch_to(Ctrl& c, std::uint32_t instr_or_table, bool table) {
    BranchTarget t;
    t.arity = static_cast<std::uint32_t>(label_types(c).size());
    t.height = c.height;
    if (c.kind == CtrlKind::loop) {
      t.pc = c.start_pc;
    } else if (table) {
      c.table_fixups.push_back(instr_or_table);
    } else {
      c.fixups.push_back(instr_or_table);
    }
    return t;
  }

  void block_type(std::vector<ValType>& params, std::vector<ValType>& results) {
    std::int64_t bt = r_.s33();
    if (bt == -64) return;  // 0x40, empty
    if (bt < 0) {
      std::uint8_t code = static_cast<std::uint8_t>(bt & 0x7f);
      switch (code) {
        case 0x7f: case 0x7e: case 0x7d: case 0x7c:
          results.push_back(static_cast<ValType>(code));
          return;
        default:
          error("invalid block type");
      }
    }
    if (static_cast<std::uint64_t>(bt) >= m_.types.size()) error("unknown type index in block type");
    params = m_.types[bt].params;
    results = m_.types[bt].results;
  }

  void require_memory() {
    if (!m_.memory) error("unknown memory 0");
  }

  std::uint32_t local_index() {
    std::uint32_t idx = r_.u32();
    if (idx >= locals_.size()) error("unknown local " + std::to_string(idx));
    return idx;
  }

  std::uint32_t global_index() {
    std::uint32_t idx = r_.u32();
    if (idx >= m_.globals.size()) error("unknown global " + std::to_string(idx));
    return idx;
  }

  void step() {
    std::uint16_t code = r_.u8();
    if (code == 0xFC) {
      std::uint32_t sub = r_.u32();
      if (sub > 0xff) error("unsupported prefixed opcode");
      code = static_cast<std::uint16_t>(op::kPrefixFC | sub);
    }
    const op::Info* info = op::by_code(code);
    if (!info) {
      error("unsupported opcode 0x" + to_hex(Bytes{static_cast<std::uint8_t>(code >> 8),
                                                    static_cast<std::uint8_t>(code & 0xff)}));
    }

    switch (code) {
      case 0x00:  // unreachable
        emit(code);
        set_unreachable();
        return;
      case 0x01:  // nop
        return;
      case 0x02:
      case 0x03: {
        std::vector<ValType> params, results;
        block_type(params, results);
        pop_all(params);
        push_ctrl(code == 0x02 ? CtrlKind::block : CtrlKind::loop, std::move(params), std::move(results));
        return;
      }
      case 0x04: {
        std::vector<ValType> params, results;
        block_type(params, results);
        pop(ValType::i32);
        pop_all(params);
        std::uint32_t at = emit(0x04);
        push_ctrl(CtrlKind::if_, std::move(params), std::move(results));
        ctrls_.back().if_instr = at;
        return;
      }
      case 0x05: {
        Ctrl& c = ctrls_.back();
        if (c.kind != CtrlKind::if_) error("else without matching if");
        check_end(c);
        c.fixups.push_back(emit(op::kJump));
        fn_.code[c.if_instr].a = pc();
        c.kind = CtrlKind::else_;
        c.unreachable = false;
        for (ValType t : c.params) push(t);
        return;
      }
      case 0x0B: {
        Ctrl c = std::move(ctrls_.back());
        check_end(c);
        ctrls_.pop_back();
        if (c.kind == CtrlKind::if_) {
          if (c.params != c.results) error("type mismatch: if without else must not change the stack type");
          fn_.code[c.if_instr].a = pc();
        }
        std::uint32_t end_pc = pc();
        if (c.kind == CtrlKind::func) {
          emit(0x0F, 0, static_cast<std::uint32_t>(c.results.size()));
        }
        for (std::uint32_t i : c.fixups) fn_.code[i].a = end_pc;
        for (std::uint32_t i : c.table_fixups) fn_.branch_tables[i].pc = end_pc;
        if (c.kind != CtrlKind::func) {
          for (ValType t : c.results) push(t);
        }
        return;
      }
      case 0x0C: {
        std::uint32_t depth = r_.u32();
        Ctrl& target = label(depth);
        pop_all(label_types(target));
        std::uint32_t at = emit(code);
        BranchTarget t = branch_to(target, at, false);
        fn_.code[at].a = t.pc;
        fn_.code[at].b = t.arity;
        fn_.code[at].c = t.height;
        set_unreachable();
        return;
      }
      case 0x0D: {
        std::uint32_t depth = r_.u32();
        pop(ValType::i32);
        Ctrl& target = label(depth);
        const auto& types = label_types(target);
        pop_all(types);
        std::uint32_t at = emit(code);
        BranchTarget t = branch_to(target, at, false);
        fn_.code[at].a = t.pc;
        fn_.code[at].b = t.arity;
        fn_.code[at].c = t.height;
        for (ValType ty : types) push(ty);
        return;
      }
      case 0x0E: {
        std::uint32_t n = r_.count();
        std::vector<std::uint32_t> depths(n + 1);
        for (auto& d : depths) d = r_.u32();
        pop(ValType::i32);
        std::size_t arity = label_types(label(depths.back())).size();
        auto first = static_cast<std::uint32_t>(fn_.branch_tables.size());
        for (std::uint32_t d : depths) {
          Ctrl& target = label(d);
          const auto& types = label_types(target);
          if (types.size() != arity) error("type mismatch: br_table targets differ in arity");
          // Check every target against the current stack without consuming it.
          std::vector<std::uint8_t> popped;
          for (auto it = types.rbegin(); it != types.rend(); ++it) popped.push_back(pop(*it));
          for (auto it = popped.rbegin(); it != popped.rend(); ++it) push(*it);
          auto slot = static_cast<std::uint32_t>(fn_.branch_tables.size());
          fn_.branch_tables.push_back(branch_to(target, slot, true));
        }
        emit(code, first, n);
        pop_all(label_types(label(depths.back())));
        set_unreachable();
        return;
      }
      case 0x0F: {
        const FuncType& type = m_.types[fn_.type_index];
        pop_all(type.results);
        emit(code, 0, static_cast<std::uint32_t>(type.results.size()));
        set_unreachable();
        return;
      }
      case 0x10: {
        std::uint32_t idx = r_.u32();
        if (idx >= m_.function_count()) error("unknown function " + std::to_string(idx));
        const FuncType& type = m_.function_type(idx);
        pop_all(type.params);
        for (ValType t : type.results) push(t);
        emit(code, idx);
        return;
      }
      case 0x11: {
        std::uint32_t type_idx = r_.u32();
        std::uint32_t table_idx = r_.u32();
        if (!m_.table || table_idx != 0) error("unknown table " + std::to_string(table_idx));
        if (type_idx >= m_.types.size()) error("unknown type " + std::to_string(type_idx));
        pop(ValType::i32);
        const FuncType& type = m_.types[type_idx];
        pop_all(type.params);
        for (ValType t : type.results) push(t);
        emit(code, type_idx);
        return;
      }
      case 0x1A:
        pop();
        emit(code);
        return;
      case 0x1B: {
        pop(ValType::i32);
        std::uint8_t t1 = pop();
        std::uint8_t t2 = pop();
        if (t1 != kUnknown && t2 != kUnknown && t1 != t2) error("type mismatch in select");
        push(t1 != kUnknown ? t1 : t2);
        emit(0x1B);
        return;
      }
      case 0x1C: {
        if (r_.u32() != 1) error("invalid result arity for typed select");
        ValType t = read_valtype(r_);
        pop(ValType::i32);
        pop(t);
        pop(t);
        push(t);
        emit(0x1B);
        return;
      }
      case 0x20: {
        std::uint32_t idx = local_index();
        push(locals_[idx]);
        emit(code, idx);
        return;
      }
      case 0x21: {
        std::uint32_t idx = local_index();
        pop(locals_[idx]);
        emit(code, idx);
        return;
      }
      case 0x22: {
        std::uint32_t idx = local_index();
        pop(locals_[idx]);
        push(locals_[idx]);
        emit(code, idx);
        return;
      }
      case 0x23: {
        std::uint32_t idx = global_index();
        push(m_.globals[idx].type);
        emit(code, idx);
        return;
      }
      case 0x24: {
        std::uint32_t idx = global_index();
        if (!m_.globals[idx].mutable_) error("global is immutable");
        pop(m_.globals[idx].type);
        emit(code, idx);
        return;
      }
      default:
        break;
    }

    // Plain instructions driven by the opcode table.
    std::uint32_t a = 0;
    std::uint64_t c = 0;
    switch (info->imm) {
      case op::Imm::memarg: {
        require_memory();
        std::uint32_t align = r_.u32();
        if (align >= 32 || (1u << align) > info->access_size)
          error("alignment must not be larger than natural");
        a = r_.u32();
        break;
      }
      case op::Imm::mem_zero:
        require_memory();
        if (r_.u8() != 0) error("zero byte expected");
        break;
      case op::Imm::mem_zero_two:
        require_memory();
        if (r_.u8() != 0 || r_.u8() != 0) error("zero byte expected");
        break;
      case op::Imm::i32: c = static_cast<std::uint32_t>(r_.s32()); break;
      case op::Imm::i64: c = static_cast<std::uint64_t>(r_.s64()); break;
      case op::Imm::f32: c = r_.fixed32(); break;
      case op::Imm::f64: c = r_.fixed64(); break;
      case op::Imm::none: break;
      default: error("unexpected immediate kind");
    }
    std::string_view sig = info->sig;
    std::size_t colon = sig.find(':');
    std::string_view ins = sig.substr(0, colon), outs = sig.substr(colon + 1);
    for (auto it = ins.rbegin(); it != ins.rend(); ++it) pop(sig_type(*it));
    for (char ch : outs) push(sig_type(ch));
    emit(code, a, 0, c);
  }

  const Module& m_;
  Function& fn_;
  Reader r_;
  std::vector<ValType> locals_;
  std::vector<std::uint8_t> vals_;
  std::vector<Ctrl> ctrls_;
  std::uint32_t max_height_ = 0;
};

// ---------------------------------------------------------------------------

int section_rank(std::uint8_t id) {
  // Data count (12) sits between element (9) and code (10).
  static constexpr int kRank[] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 10};
  return id < 13 ? kRank[id] : -1;
}

class ModuleDecoder {
 public:
  explicit ModuleDecoder(ByteView binary) : r_(binary) {}

  std::shared_ptr<Module> run() {
    static constexpr std::uint8_t kMagic[] = {0x00, 0x61, 0x73, 0x6d};
    if (r_.remaining() < 8) fail("unexpected end: module header too short");
    ByteView magic = r_.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) fail("magic header not detected");
    if (r_.fixed32() != 1) fail("unknown binary version");

    int last_rank = 0;
    while (!r_.done()) {
      std::uint8_t id = r_.u8();
      std::uint32_t size = r_.u32();
      std::size_t base = r_.offset();
      ByteView payload = r_.bytes(size);
      if (id == 0) continue;  // custom sections carry nothing we need
      int rank = section_rank(id);
      if (rank < 0) fail("malformed section id " + std::to_string(id));
      if (rank <= last_rank) fail("unexpected section order: section " + std::to_string(id));
      last_rank = rank;
      Reader s(payload, base);
      section(id, s);
      if (!s.done()) fail("section size mismatch in section " + std::to_string(id));
    }
    if (declared_.size() != (code_seen_ ? m_->functions.size() : 0))
      fail("function and code section have inconsistent lengths");
    if (data_count_ && *data_count_ != m_->data.size()) fail("data count and data section have inconsistent lengths");
    return m_;
  }

 private:
  void section(std::uint8_t id, Reader& s) {
    switch (id) {
      case 1: types(s); break;
      case 2: imports(s); break;
      case 3: functions(s); break;
      case 4: tables(s); break;
      case 5: memories(s); break;
      case 6: globals(s); break;
      case 7: exports(s); break;
      case 8: start(s); break;
      case 9: elements(s); break;
      case 10: code(s); break;
      case 11: data(s); break;
      case 12: data_count_ = s.u32(); break;
    }
  }

  void types(Reader& s) {
    std::uint32_t n = s.count();
    for (std::uint32_t i = 0; i < n; ++i) {
      if (s.u8() != 0x60) fail("malformed function type");
      FuncType ft;
      std::uint32_t np = s.count();
      for (std::uint32_t j = 0; j < np; ++j) ft.params.push_back(read_valtype(s));
      std::uint32_t nr = s.count();
      for (std::uint32_t j = 0; j < nr; ++j) ft.results.push_back(read_valtype(s));
      m_->types.push_back(std::move(ft));
    }
  }

  void imports(Reader& s) {
    std::uint32_t n = s.count();
    for (std::uint32_t i = 0; i < n; ++i) {
      Import imp;
      imp.module = s.name();
      imp.name = s.name();
      std::uint8_t kind = s.u8();
      if (kind != 0) {
        fail("unsupported import kind for " + imp.module + "." + imp.name +
             ": only function imports are supported");
      }
      imp.type_index = s.u32();
      if (imp.type_index >= m_->types.size()) fail("unknown type " + std::to_string(imp.type_index));
      m_->imports.push_back(std::move(imp));
    }
  }

  void functions(Reader& s) {
    std::uint32_t n = s.count();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t t = s.u32();
      if (t >= m_->types.size()) fail("unknown type " + std::to_string(t));
      declared_.push_back(t);
    }
  }

  void tables(Reader& s) {
    std::uint32_t n = s.count();
    if (n > 1) fail("multiple tables");
    if (n == 1) {
      if (s.u8() != 0x70) fail("unsupported table element type");
      m_->table = read_limits(s, 0xffffffffu, "table");
    }
  }

  void memories(Reader& s) {
    std::uint32_t n = s.count();
    if (n > 1) fail("multiple memories");
    if (n == 1) m_->memory = read_limits(s, 65536, "memory");
  }

  void globals(Reader& s) {
    std::uint32_t n = s.count();
    for (std::uint32_t i = 0; i < n; ++i) {
      Global g;
      g.type = read_valtype(s);
      std::uint8_t mut = s.u8();
      if (mut > 1) fail("malformed mutability");
      g.mutable_ = mut == 1;
      g.init = read_const_expr(s, g.type);
      m_->globals.push_back(g);
    }
  }

  void exports(Reader& s) {
    std::uint32_t n = s.count();
    std::set<std::string> names;
    for (std::uint32_t i = 0; i < n; ++i) {
      Export e;
      e.name = s.name();
      std::uint8_t kind = s.u8();
      if (kind > 3) fail("malformed export kind");
      e.kind = static_cast<ExternKind>(kind);
      e.index = s.u32();
      if (!names.insert(e.name).second) fail("duplicate export name " + e.name);
      bool ok = false;
      switch (e.kind) {
        case ExternKind::func: ok = e.index < m_->imports.size() + declared_.size(); break;
        case ExternKind::table: ok = e.index == 0 && m_->table.has_value(); break;
        case ExternKind::memory: ok = e.index == 0 && m_->memory.has_value(); break;
        case ExternKind::global: ok = e.index < m_->globals.size(); break;
      }
      if (!ok) fail("unknown export target for " + e.name);
      m_->exports.push_back(std::move(e));
    }
  }

  const FuncType& declared_type(std::uint32_t idx) const {
    if (idx < m_->imports.size()) return m_->types[m_->imports[idx].type_index];
    return m_->types[declared_[idx - m_->imports.size()]];
  }

  void start(Reader& s) {
    std::uint32_t idx = s.u32();
    if (idx >= m_->imports.size() + declared_.size()) fail("unknown function " + std::to_string(idx));
    const FuncType& t = declared_type(idx);
    if (!t.params.empty() || !t.results.empty()) fail("start function must have type [] -> []");
    m_->start = idx;
  }

  void elements(Reader& s) {
    std::uint32_t n = s.count();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t flags = s.u32();
      if (flags != 0 && flags != 2) fail("unsupported element segment kind " + std::to_string(flags));
      if (flags == 2 && s.u32() != 0) fail("unknown table");
      if (!m_->table) fail("unknown table 0");
      ElemSegment seg;
      seg.offset = static_cast<std::uint32_t>(read_const_expr(s, ValType::i32));
      if (flags == 2 && s.u8() != 0x00) fail("unsupported element kind");
      std::uint32_t count = s.count();
      for (std::uint32_t j = 0; j < count; ++j) {
        std::uint32_t f = s.u32();
        if (f >= m_->imports.size() + declared_.size()) fail("unknown function " + std::to_string(f));
        seg.functions.push_back(f);
      }
      m_->elements.push_back(std::move(seg));
    }
  }

  void code(Reader& s) {
    code_seen_ = true;
    std::uint32_t n = s.count();
    if (n != declared_.size()) fail("function and code section have inconsistent lengths");
    m_->functions.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) m_->functions[i].type_index = declared_[i];
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t size = s.u32();
      std::size_t base = s.offset();
      ByteView body = s.bytes(size);
      BodyCompiler(*m_, m_->functions[i], body, base).run();
    }
  }

  void data(Reader& s) {
    std::uint32_t n = s.count();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t flags = s.u32();
      DataSegment seg;
      if (flags == 1) {
        seg.active = false;
      } else if (flags == 0 || flags == 2) {
        if (flags == 2 && s.u32() != 0) fail("unknown memory");
        if (!m_->memory) fail("unknown memory 0");
        seg.offset = static_cast<std::uint32_t>(read_const_expr(s, ValType::i32));
      } else {
        fail("malformed data segment flags");
      }
      std::uint32_t len = s.u32();
      ByteView b = s.bytes(len);
      seg.bytes.assign(b.begin(), b.end());
      m_->data.push_back(std::move(seg));
    }
  }

  Reader r_;
  std::shared_ptr<Module> m_ = std::make_shared<Module>();
  std::vector<std::uint32_t> declared_;
  std::optional<std::uint32_t> data_count_;
  bool code_seen_ = false;
};

}  // namespace

const FuncType& Module::function_type(std::uint32_t index) const {
  if (index < imports.size()) return types[imports[index].type_index];
  return types[functions[index - imports.size()].type_index];
}

const Export* Module::find_export(std::string_view name, ExternKind kind) const {
  for (const Export& e : exports) {
    if (e.name == name && e.kind == kind) return &e;
  }
  return nullptr;
}

std::shared_ptr<const Module> load_module(ByteView binary) {
  return ModuleDecoder(binary).run();
}

}  // namespace watz::wasm
