#include "watz/wasm/wat.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <vector>

#include "opcodes.hpp"
#include "watz/wasm/types.hpp"

namespace watz::wasm {

namespace {

// ---------------------------------------------------------------------------
// S-expressions

struct Sexp {
  enum Kind { atom, string, list } kind = atom;
  std::string text;  // atom text, or decoded bytes for strings
  std::vector<Sexp> items;
  int line = 1;

  bool is_atom(std::string_view s) const { return kind == atom && text == s; }
  bool is_id() const { return kind == atom && !text.empty() && text[0] == '$'; }
  bool head_is(std::string_view s) const { return kind == list && !items.empty() && items[0].is_atom(s); }
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Sexp> parse_all() {
    std::vector<Sexp> out;
    skip_space();
    while (pos_ < src_.size()) {
      out.push_back(parse_one());
      skip_space();
    }
    return out;
  }

 private:
  [[noreturn]] void error(const std::string& what) { throw WatError(line_, what); }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (src_.substr(pos_, 2) == ";;") {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.substr(pos_, 2) == "(;") {
        int depth = 0;
        do {
          if (pos_ >= src_.size()) error("unterminated block comment");
          if (src_.substr(pos_, 2) == "(;") {
            ++depth;
            pos_ += 2;
          } else if (src_.substr(pos_, 2) == ";)") {
            --depth;
            pos_ += 2;
          } else {
            if (src_[pos_] == '\n') ++line_;
            ++pos_;
          }
        } while (depth > 0);
      } else {
        break;
      }
    }
  }

  Sexp parse_one() {
    Sexp s;
    s.line = line_;
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      s.kind = Sexp::list;
      for (;;) {
        skip_space();
        if (pos_ >= src_.size()) error("unbalanced parentheses");
        if (src_[pos_] == ')') {
          ++pos_;
          break;
        }
        s.items.push_back(parse_one());
      }
    } else if (c == ')') {
      error("unexpected ')'");
    } else if (c == '"') {
      s.kind = Sexp::string;
      s.text = parse_string();
    } else {
      std::size_t start = pos_;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (d == ' ' || d == '\t' || d == '\n' || d == '\r' || d == '(' || d == ')' || d == '"' || d == ';') break;
        ++pos_;
      }
      s.text = std::string(src_.substr(start, pos_ - start));
    }
    return s;
  }

  static int hexval(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  std::string parse_string() {
    std::string out;
    ++pos_;
    for (;;) {
      if (pos_ >= src_.size()) error("unterminated string");
      char c = src_[pos_++];
      if (c == '"') break;
      if (c == '\n') error("newline in string");
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= src_.size()) error("unterminated string");
      char e = src_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\'': out += '\''; break;
        case '\\': out += '\\'; break;
        case 'u': {
          if (pos_ >= src_.size() || src_[pos_] != '{') error("malformed unicode escape");
          ++pos_;
          std::uint32_t cp = 0;
          while (pos_ < src_.size() && src_[pos_] != '}') {
            int v = hexval(src_[pos_++]);
            if (v < 0) error("malformed unicode escape");
            cp = cp * 16 + static_cast<std::uint32_t>(v);
            if (cp > 0x10ffff) error("unicode escape out of range");
          }
          ++pos_;
          if (cp < 0x80) {
            out += static_cast<char>(cp);
          } else if (cp < 0x800) {
            out += static_cast<char>(0xc0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3f));
          } else if (cp < 0x10000) {
            out += static_cast<char>(0xe0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
          } else {
            out += static_cast<char>(0xf0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
          }
          break;
        }
        default: {
          int hi = hexval(e);
          int lo = pos_ < src_.size() ? hexval(src_[pos_]) : -1;
          if (hi < 0 || lo < 0) error(std::string("unknown escape \\") + e);
          ++pos_;
          out += static_cast<char>(hi * 16 + lo);
        }
      }
    }
    return out;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

[[noreturn]] void fail_at(const Sexp& s, const std::string& what) { throw WatError(s.line, what); }

// ---------------------------------------------------------------------------
// Numbers

std::string strip_underscores(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '_') out += c;
  }
  return out;
}

std::optional<std::uint64_t> parse_magnitude(std::string_view text) {
  std::string s = strip_underscores(text);
  if (s.empty()) return std::nullopt;
  int base = 10;
  std::size_t i = 0;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    i = 2;
  }
  std::uint64_t v = 0;
  for (; i < s.size(); ++i) {
    int d;
    char c = s[i];
    if (c >= '0' && c <= '9') d = c - '0';
    else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (base == 16 && c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else return std::nullopt;
    if (v > (~std::uint64_t{0} - static_cast<std::uint64_t>(d)) / static_cast<std::uint64_t>(base)) return std::nullopt;
    v = v * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(d);
  }
  return v;
}

std::uint64_t parse_int(const Sexp& s, int bits) {
  if (s.kind != Sexp::atom) fail_at(s, "expected an integer");
  std::string_view t = s.text;
  bool neg = false;
  if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
    neg = t[0] == '-';
    t.remove_prefix(1);
  }
  auto mag = parse_magnitude(t);
  if (!mag) fail_at(s, "malformed integer '" + s.text + "'");
  std::uint64_t umax = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  std::uint64_t nmax = std::uint64_t{1} << (bits - 1);
  if (neg ? *mag > nmax : *mag > umax) fail_at(s, "integer constant out of range: " + s.text);
  std::uint64_t v = neg ? (~*mag + 1) : *mag;
  return bits == 64 ? v : v & umax;
}

std::uint32_t parse_u32(const Sexp& s) {
  if (s.kind != Sexp::atom || s.text.empty() || s.text[0] == '-' || s.text[0] == '+') fail_at(s, "expected an index or size");
  return static_cast<std::uint32_t>(parse_int(s, 32));
}

bool looks_numeric(const Sexp& s) {
  if (s.kind != Sexp::atom || s.text.empty()) return false;
  char c = s.text[0];
  return (c >= '0' && c <= '9');
}

template <class F, class U>
U parse_float_bits(const Sexp& s) {
  constexpr bool is32 = sizeof(F) == 4;
  constexpr int mant_bits = is32 ? 23 : 52;
  constexpr U exp_mask = is32 ? U(0x7f800000u) : U(0x7ff0000000000000ull);
  constexpr U sign_bit = U(1) << (is32 ? 31 : 63);
  if (s.kind != Sexp::atom) fail_at(s, "expected a float");
  std::string t = strip_underscores(s.text);
  bool neg = false;
  if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
    neg = t[0] == '-';
    t.erase(0, 1);
  }
  U out;
  if (t == "inf") {
    out = exp_mask;
  } else if (t.rfind("nan", 0) == 0) {
    U payload = U(1) << (mant_bits - 1);
    if (t.size() > 3) {
      if (t.rfind("nan:0x", 0) != 0) fail_at(s, "malformed NaN");
      auto p = parse_magnitude(t.substr(4));
      if (!p || *p == 0 || *p >= (std::uint64_t{1} << mant_bits)) fail_at(s, "NaN payload out of range");
      payload = static_cast<U>(*p);
    }
    out = exp_mask | payload;
  } else {
    if (t.empty() || !(std::isdigit(static_cast<unsigned char>(t[0])))) fail_at(s, "malformed float '" + s.text + "'");
    bool hex = t.size() > 1 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X');
    const char* begin = t.c_str();
    char* end = nullptr;
    errno = 0;
    F v;
    if constexpr (is32) v = std::strtof(begin, &end);
    else v = std::strtod(begin, &end);
    if (end != begin + t.size()) fail_at(s, "malformed float '" + s.text + "'");
    if (std::isinf(v) && !hex) fail_at(s, "float constant out of range: " + s.text);
    if (std::isinf(v)) fail_at(s, "float constant out of range: " + s.text);
    out = std::bit_cast<U>(v);
  }
  return neg ? (out | sign_bit) : out;
}

// ---------------------------------------------------------------------------
// Binary output

void put_u32(Bytes& out, std::uint32_t v) {
  do {
    std::uint8_t b = v & 0x7f;
    v >>= 7;
    if (v) b |= 0x80;
    out.push_back(b);
  } while (v);
}

void put_s64(Bytes& out, std::int64_t v) {
  for (;;) {
    std::uint8_t b = v & 0x7f;
    v >>= 7;
    bool done = (v == 0 && !(b & 0x40)) || (v == -1 && (b & 0x40));
    if (!done) b |= 0x80;
    out.push_back(b);
    if (done) break;
  }
}

void put_name(Bytes& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_section(Bytes& out, std::uint8_t id, const Bytes& payload) {
  out.push_back(id);
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
}

std::optional<ValType> valtype_of(std::string_view s) {
  if (s == "i32") return ValType::i32;
  if (s == "i64") return ValType::i64;
  if (s == "f32") return ValType::f32;
  if (s == "f64") return ValType::f64;
  return std::nullopt;
}

ValType expect_valtype(const Sexp& s) {
  auto t = s.kind == Sexp::atom ? valtype_of(s.text) : std::nullopt;
  if (!t) fail_at(s, "expected a value type, got '" + s.text + "'");
  return *t;
}

// ---------------------------------------------------------------------------
// Assembler

struct FuncDecl {
  const Sexp* node = nullptr;
  std::uint32_t type_index = 0;
  std::vector<std::optional<std::string>> param_names;
  std::optional<std::string> import_module, import_name;
};

struct GlobalDecl {
  ValType type;
  bool mutable_;
  const Sexp* init;
};

struct Export {
  std::string name;
  std::uint8_t kind;
  const Sexp* ref;          // index or $id to resolve; nullptr when index is known
  std::uint32_t index = 0;
};

class Assembler {
 public:
  Bytes run(std::string_view text) {
    std::vector<Sexp> top = Lexer(text).parse_all();
    std::vector<const Sexp*> fields;
    if (top.size() == 1 && top[0].head_is("module")) {
      std::size_t i = 1;
      if (i < top[0].items.size() && top[0].items[i].is_id()) ++i;
      for (; i < top[0].items.size(); ++i) fields.push_back(&top[0].items[i]);
    } else {
      for (const Sexp& s : top) fields.push_back(&s);
    }
    for (const Sexp* f : fields) {
      if (f->kind != Sexp::list || f->items.empty()) fail_at(*f, "expected a module field");
    }

    // Pass 1: types first so type uses can refer forward.
    for (const Sexp* f : fields) {
      if (f->head_is("type")) declare_type(*f);
    }
    // Imported functions occupy the low indices.
    for (const Sexp* f : fields) {
      if (f->head_is("import")) declare_import(*f);
      else if (f->head_is("func") && inline_import(*f)) declare_func(*f);
    }
    for (const Sexp* f : fields) {
      if (f->head_is("func") && !inline_import(*f)) declare_func(*f);
      else if (f->head_is("memory")) declare_memory(*f);
      else if (f->head_is("global")) declare_global(*f);
      else if (f->head_is("table")) declare_table(*f);
    }
    for (const Sexp* f : fields) {
      const std::string& head = f->items[0].text;
      if (head == "export") declare_export(*f);
      else if (head == "start") start_ = f;
      else if (head == "data") data_fields_.push_back(f);
      else if (head == "elem") elem_fields_.push_back(f);
      else if (head != "type" && head != "import" && head != "func" && head != "memory" && head != "global" &&
               head != "table") {
        fail_at(*f, "unknown module field '" + head + "'");
      }
    }

    // Pass 2: code.
    std::vector<Bytes> bodies;
    for (const FuncDecl& fn : funcs_) {
      if (!fn.import_module) bodies.push_back(compile_body(fn));
    }
    return emit(bodies);
  }

 private:
  // -- declarations -------------------------------------------------------

  static bool inline_import(const Sexp& f) {
    for (const Sexp& s : f.items) {
      if (s.head_is("import")) return true;
    }
    return false;
  }

  std::uint32_t intern_type(const FuncType& t) {
    for (std::size_t i = 0; i < types_.size(); ++i) {
      if (types_[i] == t) return static_cast<std::uint32_t>(i);
    }
    types_.push_back(t);
    return static_cast<std::uint32_t>(types_.size() - 1);
  }

  void declare_type(const Sexp& f) {
    std::size_t i = 1;
    if (i < f.items.size() && f.items[i].is_id()) {
      type_names_[f.items[i].text] = static_cast<std::uint32_t>(types_.size());
      ++i;
    }
    if (i >= f.items.size() || !f.items[i].head_is("func")) fail_at(f, "expected (func ...) in type");
    FuncType ft;
    std::size_t j = 1;
    read_params_results(f.items[i], j, ft, nullptr);
    types_.push_back(ft);  // explicit types are never merged
  }

  // Reads (param ...)* (result ...)* starting at items[i].
  void read_params_results(const Sexp& list, std::size_t& i, FuncType& ft,
                           std::vector<std::optional<std::string>>* names) {
    while (i < list.items.size() && list.items[i].head_is("param")) {
      const Sexp& p = list.items[i++];
      if (p.items.size() >= 2 && p.items[1].is_id()) {
        if (p.items.size() != 3) fail_at(p, "named param takes exactly one type");
        ft.params.push_back(expect_valtype(p.items[2]));
        if (names) names->push_back(p.items[1].text);
      } else {
        for (std::size_t k = 1; k < p.items.size(); ++k) {
          ft.params.push_back(expect_valtype(p.items[k]));
          if (names) names->push_back(std::nullopt);
        }
      }
    }
    while (i < list.items.size() && list.items[i].head_is("result")) {
      const Sexp& r = list.items[i++];
      for (std::size_t k = 1; k < r.items.size(); ++k) ft.results.push_back(expect_valtype(r.items[k]));
    }
  }

  std::uint32_t type_ref(const Sexp& s) {
    if (s.is_id()) {
      auto it = type_names_.find(s.text);
      if (it == type_names_.end()) fail_at(s, "unknown type " + s.text);
      return it->second;
    }
    std::uint32_t idx = parse_u32(s);
    if (idx >= types_.size()) fail_at(s, "unknown type " + s.text);
    return idx;
  }

  // typeuse: (type x)? (param ...)* (result ...)*
  std::uint32_t read_typeuse(const Sexp& list, std::size_t& i, std::vector<std::optional<std::string>>* names) {
    std::optional<std::uint32_t> explicit_type;
    if (i < list.items.size() && list.items[i].head_is("type")) {
      const Sexp& t = list.items[i++];
      if (t.items.size() != 2) fail_at(t, "malformed type use");
      explicit_type = type_ref(t.items[1]);
    }
    FuncType ft;
    std::vector<std::optional<std::string>> local_names;
    read_params_results(list, i, ft, &local_names);
    if (explicit_type) {
      const FuncType& declared = types_[*explicit_type];
      if ((!ft.params.empty() || !ft.results.empty()) && ft != declared) fail_at(list, "inline function type does not match (type ...)");
      if (names) {
        *names = local_names.empty() ? std::vector<std::optional<std::string>>(declared.params.size()) : local_names;
      }
      return *explicit_type;
    }
    if (names) *names = local_names;
    return intern_type(ft);
  }

  void add_name(std::map<std::string, std::uint32_t>& space, const Sexp& id, std::uint32_t index) {
    if (!space.emplace(id.text, index).second) fail_at(id, "duplicate identifier " + id.text);
  }

  void declare_import(const Sexp& f) {
    if (f.items.size() != 4 || f.items[1].kind != Sexp::string || f.items[2].kind != Sexp::string)
      fail_at(f, "malformed import");
    const Sexp& desc = f.items[3];
    if (!desc.head_is("func")) fail_at(desc, "only function imports are supported");
    FuncDecl d;
    d.node = &desc;
    d.import_module = f.items[1].text;
    d.import_name = f.items[2].text;
    std::size_t i = 1;
    if (i < desc.items.size() && desc.items[i].is_id()) add_name(func_names_, desc.items[i++], fn_count());
    d.type_index = read_typeuse(desc, i, &d.param_names);
    if (i != desc.items.size()) fail_at(desc, "unexpected tokens in import");
    funcs_.push_back(std::move(d));
  }

  std::uint32_t fn_count() const { return static_cast<std::uint32_t>(funcs_.size()); }

  std::size_t read_inline_exports(const Sexp& f, std::size_t i, std::uint8_t kind, std::uint32_t index) {
    while (i < f.items.size() && f.items[i].head_is("export")) {
      const Sexp& e = f.items[i++];
      if (e.items.size() != 2 || e.items[1].kind != Sexp::string) fail_at(e, "malformed inline export");
      exports_.push_back(Export{e.items[1].text, kind, nullptr, index});
    }
    return i;
  }

  void declare_func(const Sexp& f) {
    FuncDecl d;
    d.node = &f;
    std::size_t i = 1;
    std::uint32_t index = fn_count();
    if (i < f.items.size() && f.items[i].is_id()) add_name(func_names_, f.items[i++], index);
    i = read_inline_exports(f, i, 0, index);
    if (i < f.items.size() && f.items[i].head_is("import")) {
      const Sexp& im = f.items[i++];
      if (im.items.size() != 3) fail_at(im, "malformed inline import");
      d.import_module = im.items[1].text;
      d.import_name = im.items[2].text;
    }
    d.type_index = read_typeuse(f, i, &d.param_names);
    funcs_.push_back(std::move(d));
  }

  void declare_memory(const Sexp& f) {
    if (memory_) fail_at(f, "multiple memories");
    std::size_t i = 1;
    if (i < f.items.size() && f.items[i].is_id()) memory_name_ = f.items[i++].text;
    i = read_inline_exports(f, i, 2, 0);
    Bytes limits;
    if (i >= f.items.size()) fail_at(f, "memory needs a size");
    std::uint32_t min = parse_u32(f.items[i++]);
    if (i < f.items.size()) {
      std::uint32_t max = parse_u32(f.items[i++]);
      limits.push_back(1);
      put_u32(limits, min);
      put_u32(limits, max);
    } else {
      limits.push_back(0);
      put_u32(limits, min);
    }
    if (i != f.items.size()) fail_at(f, "unexpected tokens in memory");
    memory_ = limits;
  }

  void declare_table(const Sexp& f) {
    if (table_) fail_at(f, "multiple tables");
    std::size_t i = 1;
    if (i < f.items.size() && f.items[i].is_id()) ++i;
    i = read_inline_exports(f, i, 1, 0);
    Bytes t;
    t.push_back(0x70);
    if (i < f.items.size() && f.items[i].is_atom("funcref")) {
      // (table funcref (elem $f ...)) sizes the table from the element list.
      ++i;
      if (i >= f.items.size() || !f.items[i].head_is("elem")) fail_at(f, "expected (elem ...)");
      const Sexp& el = f.items[i];
      auto n = static_cast<std::uint32_t>(el.items.size() - 1);
      t.push_back(1);
      put_u32(t, n);
      put_u32(t, n);
      inline_elems_ = &el;
      table_ = t;
      return;
    }
    std::uint32_t min = parse_u32(f.items[i++]);
    std::optional<std::uint32_t> max;
    if (i < f.items.size() && looks_numeric(f.items[i])) max = parse_u32(f.items[i++]);
    if (i >= f.items.size() || !f.items[i].is_atom("funcref")) fail_at(f, "expected funcref");
    t.push_back(max ? 1 : 0);
    put_u32(t, min);
    if (max) put_u32(t, *max);
    table_ = t;
  }

  void declare_global(const Sexp& f) {
    std::size_t i = 1;
    auto index = static_cast<std::uint32_t>(globals_.size());
    if (i < f.items.size() && f.items[i].is_id()) add_name(global_names_, f.items[i++], index);
    i = read_inline_exports(f, i, 3, index);
    if (i + 2 != f.items.size()) fail_at(f, "malformed global");
    const Sexp& ty = f.items[i];
    GlobalDecl g;
    if (ty.head_is("mut")) {
      if (ty.items.size() != 2) fail_at(ty, "malformed (mut ...)");
      g.type = expect_valtype(ty.items[1]);
      g.mutable_ = true;
    } else {
      g.type = expect_valtype(ty);
      g.mutable_ = false;
    }
    g.init = &f.items[i + 1];
    globals_.push_back(g);
  }

  void declare_export(const Sexp& f) {
    if (f.items.size() != 3 || f.items[1].kind != Sexp::string || f.items[2].kind != Sexp::list ||
        f.items[2].items.size() != 2)
      fail_at(f, "malformed export");
    const Sexp& d = f.items[2];
    const std::string& k = d.items[0].text;
    std::uint8_t kind;
    if (k == "func") kind = 0;
    else if (k == "table") kind = 1;
    else if (k == "memory") kind = 2;
    else if (k == "global") kind = 3;
    else fail_at(d, "unknown export kind " + k);
    exports_.push_back(Export{f.items[1].text, kind, &d.items[1], 0});
  }

  std::uint32_t func_ref(const Sexp& s) {
    if (s.is_id()) {
      auto it = func_names_.find(s.text);
      if (it == func_names_.end()) fail_at(s, "unknown function " + s.text);
      return it->second;
    }
    std::uint32_t idx = parse_u32(s);
    if (idx >= funcs_.size()) fail_at(s, "unknown function " + s.text);
    return idx;
  }

  std::uint32_t global_ref(const Sexp& s) {
    if (s.is_id()) {
      auto it = global_names_.find(s.text);
      if (it == global_names_.end()) fail_at(s, "unknown global " + s.text);
      return it->second;
    }
    std::uint32_t idx = parse_u32(s);
    if (idx >= globals_.size()) fail_at(s, "unknown global " + s.text);
    return idx;
  }

  // -- code ---------------------------------------------------------------

  struct FnCtx {
    std::map<std::string, std::uint32_t> locals;
    std::vector<std::optional<std::string>> labels;
    Bytes code;
  };

  Bytes compile_body(const FuncDecl& fn) {
    const Sexp& f = *fn.node;
    FnCtx ctx;
    for (std::size_t p = 0; p < fn.param_names.size(); ++p) {
      if (fn.param_names[p] && !ctx.locals.emplace(*fn.param_names[p], static_cast<std::uint32_t>(p)).second)
        fail_at(f, "duplicate local " + *fn.param_names[p]);
    }
    auto next_local = static_cast<std::uint32_t>(types_[fn.type_index].params.size());

    std::size_t i = 1;
    if (i < f.items.size() && f.items[i].is_id()) ++i;
    while (i < f.items.size() && f.items[i].head_is("export")) ++i;
    if (i < f.items.size() && f.items[i].head_is("type")) ++i;
    while (i < f.items.size() && (f.items[i].head_is("param") || f.items[i].head_is("result"))) ++i;

    std::vector<ValType> locals;
    while (i < f.items.size() && f.items[i].head_is("local")) {
      const Sexp& l = f.items[i++];
      if (l.items.size() >= 2 && l.items[1].is_id()) {
        if (l.items.size() != 3) fail_at(l, "named local takes exactly one type");
        if (!ctx.locals.emplace(l.items[1].text, next_local).second) fail_at(l, "duplicate local " + l.items[1].text);
        locals.push_back(expect_valtype(l.items[2]));
        ++next_local;
      } else {
        for (std::size_t k = 1; k < l.items.size(); ++k) {
          locals.push_back(expect_valtype(l.items[k]));
          ++next_local;
        }
      }
    }

    instr_seq(ctx, f, i, f.items.size());
    ctx.code.push_back(0x0B);

    Bytes body;
    // Run-length encode the local declarations.
    std::vector<std::pair<std::uint32_t, ValType>> groups;
    for (ValType t : locals) {
      if (!groups.empty() && groups.back().second == t) ++groups.back().first;
      else groups.emplace_back(1, t);
    }
    put_u32(body, static_cast<std::uint32_t>(groups.size()));
    for (auto& [n, t] : groups) {
      put_u32(body, n);
      body.push_back(static_cast<std::uint8_t>(t));
    }
    body.insert(body.end(), ctx.code.begin(), ctx.code.end());
    return body;
  }

  void instr_seq(FnCtx& ctx, const Sexp& list, std::size_t i, std::size_t end) {
    while (i < end) {
      const Sexp& s = list.items[i];
      if (s.kind == Sexp::list) {
        folded(ctx, s);
        ++i;
      } else {
        i = plain(ctx, list, i, end);
      }
    }
  }

  std::uint32_t label_ref(FnCtx& ctx, const Sexp& s) {
    if (s.is_id()) {
      for (std::size_t d = 0; d < ctx.labels.size(); ++d) {
        const auto& name = ctx.labels[ctx.labels.size() - 1 - d];
        if (name && *name == s.text) return static_cast<std::uint32_t>(d);
      }
      fail_at(s, "unknown label " + s.text);
    }
    return parse_u32(s);
  }

  std::uint32_t local_ref(FnCtx& ctx, const Sexp& s) {
    if (s.is_id()) {
      auto it = ctx.locals.find(s.text);
      if (it == ctx.locals.end()) fail_at(s, "unknown local " + s.text);
      return it->second;
    }
    return parse_u32(s);
  }

  // Block header: label? typeuse. Appends the block type encoding.
  void block_header(FnCtx& ctx, const Sexp& list, std::size_t& i, std::size_t end) {
    std::optional<std::string> label;
    if (i < end && list.items[i].is_id()) label = list.items[i++].text;
    std::optional<std::uint32_t> explicit_type;
    if (i < end && list.items[i].head_is("type")) {
      const Sexp& t = list.items[i++];
      if (t.items.size() != 2) fail_at(t, "malformed type use");
      explicit_type = type_ref(t.items[1]);
    }
    FuncType ft;
    read_params_results(list, i, ft, nullptr);
    if (explicit_type) {
      put_s64(ctx.code, *explicit_type);
    } else if (ft.params.empty() && ft.results.empty()) {
      ctx.code.push_back(0x40);
    } else if (ft.params.empty() && ft.results.size() == 1) {
      ctx.code.push_back(static_cast<std::uint8_t>(ft.results[0]));
    } else {
      put_s64(ctx.code, intern_type(ft));
    }
    ctx.labels.push_back(label);
  }

  void end_label(FnCtx&, const Sexp& list, std::size_t& i, std::size_t end, const std::optional<std::string>& label) {
    if (i < end && list.items[i].is_id()) {
      if (!label || *label != list.items[i].text) fail_at(list.items[i], "mismatching label " + list.items[i].text);
      ++i;
    }
  }

  // Emits one plain instruction starting at items[i]; returns the next index.
  std::size_t plain(FnCtx& ctx, const Sexp& list, std::size_t i, std::size_t end) {
    const Sexp& name = list.items[i++];
    const std::string& op = name.text;
    Bytes& out = ctx.code;

    if (op == "block" || op == "loop" || op == "if") {
      out.push_back(op == "block" ? 0x02 : op == "loop" ? 0x03 : 0x04);
      block_header(ctx, list, i, end);
      return i;
    }
    if (op == "else") {
      if (ctx.labels.empty()) fail_at(name, "else outside of a block");
      out.push_back(0x05);
      end_label(ctx, list, i, end, ctx.labels.back());
      return i;
    }
    if (op == "end") {
      if (ctx.labels.empty()) fail_at(name, "end outside of a block");
      out.push_back(0x0B);
      auto label = ctx.labels.back();
      ctx.labels.pop_back();
      end_label(ctx, list, i, end, label);
      return i;
    }
    if (op == "select") {
      if (i < end && list.items[i].head_is("result")) {
        const Sexp& r = list.items[i++];
        out.push_back(0x1C);
        put_u32(out, static_cast<std::uint32_t>(r.items.size() - 1));
        for (std::size_t k = 1; k < r.items.size(); ++k) out.push_back(static_cast<std::uint8_t>(expect_valtype(r.items[k])));
      } else {
        out.push_back(0x1B);
      }
      return i;
    }

    const op::Info* info = op::by_name(op);
    if (!info || op == "select_t") fail_at(name, "unknown instruction '" + op + "'");
    if (info->code >= op::kPrefixFC) {
      out.push_back(0xFC);
      put_u32(out, info->code & 0xff);
    } else {
      out.push_back(static_cast<std::uint8_t>(info->code));
    }

    auto need = [&](const char* what) -> const Sexp& {
      if (i >= end || list.items[i].kind != Sexp::atom) fail_at(name, std::string(op) + " expects " + what);
      return list.items[i++];
    };

    switch (info->imm) {
      case op::Imm::none:
        break;
      case op::Imm::label:
        put_u32(out, label_ref(ctx, need("a label")));
        break;
      case op::Imm::br_table: {
        std::vector<std::uint32_t> labels;
        while (i < end && list.items[i].kind == Sexp::atom && (list.items[i].is_id() || looks_numeric(list.items[i])))
          labels.push_back(label_ref(ctx, list.items[i++]));
        if (labels.empty()) fail_at(name, "br_table expects at least one label");
        put_u32(out, static_cast<std::uint32_t>(labels.size() - 1));
        for (std::uint32_t l : labels) put_u32(out, l);
        break;
      }
      case op::Imm::func:
        put_u32(out, func_ref(need("a function")));
        break;
      case op::Imm::call_indirect: {
        if (i < end && list.items[i].kind == Sexp::atom && (list.items[i].is_id() || looks_numeric(list.items[i]))) {
          if (parse_u32(list.items[i]) != 0) fail_at(list.items[i], "only table 0 exists");
          ++i;
        }
        std::uint32_t t = read_typeuse(list, i, nullptr);
        put_u32(out, t);
        out.push_back(0x00);
        break;
      }
      case op::Imm::local:
        put_u32(out, local_ref(ctx, need("a local")));
        break;
      case op::Imm::global:
        put_u32(out, global_ref(need("a global")));
        break;
      case op::Imm::memarg: {
        std::uint32_t offset = 0;
        unsigned align = 0;
        while (align < 31 && (1u << align) < info->access_size) ++align;
        while (i < end && list.items[i].kind == Sexp::atom) {
          const std::string& t = list.items[i].text;
          if (t.rfind("offset=", 0) == 0) {
            Sexp v = list.items[i];
            v.text = t.substr(7);
            offset = parse_u32(v);
          } else if (t.rfind("align=", 0) == 0) {
            Sexp v = list.items[i];
            v.text = t.substr(6);
            std::uint32_t a = parse_u32(v);
            if (a == 0 || (a & (a - 1))) fail_at(list.items[i], "alignment must be a power of two");
            align = static_cast<unsigned>(std::countr_zero(a));
          } else {
            break;
          }
          ++i;
        }
        put_u32(out, align);
        put_u32(out, offset);
        break;
      }
      case op::Imm::mem_zero:
        out.push_back(0x00);
        break;
      case op::Imm::mem_zero_two:
        out.push_back(0x00);
        out.push_back(0x00);
        break;
      case op::Imm::i32:
        put_s64(out, static_cast<std::int32_t>(parse_int(need("an i32"), 32)));
        break;
      case op::Imm::i64:
        put_s64(out, static_cast<std::int64_t>(parse_int(need("an i64"), 64)));
        break;
      case op::Imm::f32: {
        std::uint32_t b = parse_float_bits<float, std::uint32_t>(need("an f32"));
        for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(b >> (8 * k)));
        break;
      }
      case op::Imm::f64: {
        std::uint64_t b = parse_float_bits<double, std::uint64_t>(need("an f64"));
        for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(b >> (8 * k)));
        break;
      }
      default:
        fail_at(name, "unsupported instruction '" + op + "'");
    }
    return i;
  }

  void folded(FnCtx& ctx, const Sexp& s) {
    if (s.items.empty() || s.items[0].kind != Sexp::atom) fail_at(s, "expected an instruction");
    const std::string& op = s.items[0].text;
    std::size_t end = s.items.size();

    if (op == "block" || op == "loop") {
      std::size_t i = 1;
      ctx.code.push_back(op == "block" ? 0x02 : 0x03);
      block_header(ctx, s, i, end);
      instr_seq(ctx, s, i, end);
      ctx.code.push_back(0x0B);
      ctx.labels.pop_back();
      return;
    }
    if (op == "if") {
      // Parse the header into a scratch buffer since conditions come first.
      std::size_t i = 1;
      Bytes saved = std::move(ctx.code);
      ctx.code.clear();
      block_header(ctx, s, i, end);
      Bytes bt = std::move(ctx.code);
      auto label = ctx.labels.back();
      ctx.labels.pop_back();
      ctx.code = std::move(saved);

      std::size_t then_at = i;
      while (then_at < end && !s.items[then_at].head_is("then")) ++then_at;
      if (then_at == end) fail_at(s, "if requires a (then ...) clause");
      for (std::size_t k = i; k < then_at; ++k) folded(ctx, s.items[k]);

      ctx.code.push_back(0x04);
      ctx.code.insert(ctx.code.end(), bt.begin(), bt.end());
      ctx.labels.push_back(label);
      const Sexp& then_clause = s.items[then_at];
      instr_seq(ctx, then_clause, 1, then_clause.items.size());
      if (then_at + 1 < end) {
        const Sexp& else_clause = s.items[then_at + 1];
        if (!else_clause.head_is("else") || then_at + 2 != end) fail_at(else_clause, "expected (else ...)");
        ctx.code.push_back(0x05);
        instr_seq(ctx, else_clause, 1, else_clause.items.size());
      }
      ctx.code.push_back(0x0B);
      ctx.labels.pop_back();
      return;
    }

    // (op immediates... operands...): operands are the trailing folded lists
    // that are not part of the immediates.
    Bytes saved = std::move(ctx.code);
    ctx.code.clear();
    std::size_t after = plain(ctx, s, 0, end);
    Bytes instr = std::move(ctx.code);
    ctx.code = std::move(saved);
    for (std::size_t k = after; k < end; ++k) {
      if (s.items[k].kind != Sexp::list) fail_at(s.items[k], "unexpected token in folded instruction");
      folded(ctx, s.items[k]);
    }
    ctx.code.insert(ctx.code.end(), instr.begin(), instr.end());
  }

  // -- constant expressions and segments ------------------------------------

  void const_expr(Bytes& out, const Sexp& e) {
    if (e.kind != Sexp::list || e.items.size() != 2) fail_at(e, "expected a constant expression");
    const std::string& op = e.items[0].text;
    if (op == "i32.const") {
      out.push_back(0x41);
      put_s64(out, static_cast<std::int32_t>(parse_int(e.items[1], 32)));
    } else if (op == "i64.const") {
      out.push_back(0x42);
      put_s64(out, static_cast<std::int64_t>(parse_int(e.items[1], 64)));
    } else if (op == "f32.const") {
      out.push_back(0x43);
      std::uint32_t b = parse_float_bits<float, std::uint32_t>(e.items[1]);
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(b >> (8 * k)));
    } else if (op == "f64.const") {
      out.push_back(0x44);
      std::uint64_t b = parse_float_bits<double, std::uint64_t>(e.items[1]);
      for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(b >> (8 * k)));
    } else {
      fail_at(e, "unsupported constant expression " + op);
    }
    out.push_back(0x0B);
  }

  const Sexp& offset_expr(const Sexp& f, std::size_t& i) {
    if (i >= f.items.size()) fail_at(f, "missing offset expression");
    const Sexp& e = f.items[i++];
    if (e.head_is("offset")) {
      if (e.items.size() != 2) fail_at(e, "malformed offset");
      return e.items[1];
    }
    return e;
  }

  void data_segment(Bytes& out, const Sexp& f) {
    std::size_t i = 1;
    if (i < f.items.size() && f.items[i].is_id()) ++i;
    if (i < f.items.size() && f.items[i].head_is("memory")) ++i;
    if (i < f.items.size() && f.items[i].kind == Sexp::string) {
      out.push_back(0x01);  // passive
    } else {
      out.push_back(0x00);
      const_expr(out, offset_expr(f, i));
    }
    std::string bytes;
    for (; i < f.items.size(); ++i) {
      if (f.items[i].kind != Sexp::string) fail_at(f.items[i], "expected a data string");
      bytes += f.items[i].text;
    }
    put_name(out, bytes);
  }

  void elem_segment(Bytes& out, const Sexp& f) {
    std::size_t i = 1;
    if (i < f.items.size() && f.items[i].is_id()) ++i;
    if (i < f.items.size() && f.items[i].head_is("table")) ++i;
    out.push_back(0x00);
    const_expr(out, offset_expr(f, i));
    if (i < f.items.size() && f.items[i].is_atom("func")) ++i;
    std::vector<std::uint32_t> fns;
    for (; i < f.items.size(); ++i) fns.push_back(func_ref(f.items[i]));
    put_u32(out, static_cast<std::uint32_t>(fns.size()));
    for (std::uint32_t fn : fns) put_u32(out, fn);
  }

  // -- output -------------------------------------------------------------

  Bytes emit(const std::vector<Bytes>& bodies) {
    Bytes out = {0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00};
    Bytes sec;

    if (!types_.empty()) {
      put_u32(sec, static_cast<std::uint32_t>(types_.size()));
      for (const FuncType& t : types_) {
        sec.push_back(0x60);
        put_u32(sec, static_cast<std::uint32_t>(t.params.size()));
        for (ValType v : t.params) sec.push_back(static_cast<std::uint8_t>(v));
        put_u32(sec, static_cast<std::uint32_t>(t.results.size()));
        for (ValType v : t.results) sec.push_back(static_cast<std::uint8_t>(v));
      }
      put_section(out, 1, sec);
    }

    std::uint32_t n_imports = 0;
    sec.clear();
    for (const FuncDecl& f : funcs_) {
      if (!f.import_module) continue;
      ++n_imports;
      put_name(sec, *f.import_module);
      put_name(sec, *f.import_name);
      sec.push_back(0x00);
      put_u32(sec, f.type_index);
    }
    if (n_imports) {
      Bytes s;
      put_u32(s, n_imports);
      s.insert(s.end(), sec.begin(), sec.end());
      put_section(out, 2, s);
    }

    if (!bodies.empty()) {
      sec.clear();
      put_u32(sec, static_cast<std::uint32_t>(bodies.size()));
      for (const FuncDecl& f : funcs_) {
        if (!f.import_module) put_u32(sec, f.type_index);
      }
      put_section(out, 3, sec);
    }

    if (table_) {
      sec.clear();
      put_u32(sec, 1);
      sec.insert(sec.end(), table_->begin(), table_->end());
      put_section(out, 4, sec);
    }
    if (memory_) {
      sec.clear();
      put_u32(sec, 1);
      sec.insert(sec.end(), memory_->begin(), memory_->end());
      put_section(out, 5, sec);
    }
    if (!globals_.empty()) {
      sec.clear();
      put_u32(sec, static_cast<std::uint32_t>(globals_.size()));
      for (const GlobalDecl& g : globals_) {
        sec.push_back(static_cast<std::uint8_t>(g.type));
        sec.push_back(g.mutable_ ? 1 : 0);
        const_expr(sec, *g.init);
      }
      put_section(out, 6, sec);
    }
    if (!exports_.empty()) {
      sec.clear();
      put_u32(sec, static_cast<std::uint32_t>(exports_.size()));
      for (const Export& e : exports_) {
        put_name(sec, e.name);
        sec.push_back(e.kind);
        std::uint32_t idx = e.index;
        if (e.ref) {
          switch (e.kind) {
            case 0: idx = func_ref(*e.ref); break;
            case 3: idx = global_ref(*e.ref); break;
            default:
              idx = e.ref->is_id() ? 0 : parse_u32(*e.ref);
              if (e.ref->is_id() && e.kind == 2 && memory_name_ != e.ref->text) fail_at(*e.ref, "unknown memory " + e.ref->text);
          }
        }
        put_u32(sec, idx);
      }
      put_section(out, 7, sec);
    }
    if (start_) {
      if (start_->items.size() != 2) fail_at(*start_, "malformed start");
      sec.clear();
      put_u32(sec, func_ref(start_->items[1]));
      put_section(out, 8, sec);
    }
    std::size_t n_elems = elem_fields_.size() + (inline_elems_ ? 1 : 0);
    if (n_elems) {
      sec.clear();
      put_u32(sec, static_cast<std::uint32_t>(n_elems));
      if (inline_elems_) {
        sec.insert(sec.end(), {0x00, 0x41, 0x00, 0x0B});
        put_u32(sec, static_cast<std::uint32_t>(inline_elems_->items.size() - 1));
        for (std::size_t k = 1; k < inline_elems_->items.size(); ++k) put_u32(sec, func_ref(inline_elems_->items[k]));
      }
      for (const Sexp* f : elem_fields_) elem_segment(sec, *f);
      put_section(out, 9, sec);
    }
    if (!bodies.empty()) {
      sec.clear();
      put_u32(sec, static_cast<std::uint32_t>(bodies.size()));
      for (const Bytes& b : bodies) {
        put_u32(sec, static_cast<std::uint32_t>(b.size()));
        sec.insert(sec.end(), b.begin(), b.end());
      }
      put_section(out, 10, sec);
    }
    if (!data_fields_.empty()) {
      sec.clear();
      put_u32(sec, static_cast<std::uint32_t>(data_fields_.size()));
      for (const Sexp* f : data_fields_) data_segment(sec, *f);
      put_section(out, 11, sec);
    }
    return out;
  }

  std::vector<FuncType> types_;
  std::map<std::string, std::uint32_t> type_names_;
  std::vector<FuncDecl> funcs_;
  std::map<std::string, std::uint32_t> func_names_;
  std::vector<GlobalDecl> globals_;
  std::map<std::string, std::uint32_t> global_names_;
  std::optional<Bytes> memory_;
  std::optional<std::string> memory_name_;
  std::optional<Bytes> table_;
  const Sexp* inline_elems_ = nullptr;
  std::vector<Export> exports_;
  const Sexp* start_ = nullptr;
  std::vector<const Sexp*> data_fields_;
  std::vector<const Sexp*> elem_fields_;
};

}  // namespace

Bytes assemble_wat(std::string_view text) { return Assembler().run(text); }

}  // namespace watz::wasm
