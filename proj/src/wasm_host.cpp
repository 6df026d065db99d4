#include "watz/wasm_host.hpp"

#include <chrono>
#include <cstring>

#include "watz/wire.hpp"

namespace watz::host {

namespace wasm = watz::wasm;

const char* to_string(Errno e) noexcept {
  switch (e) {
    case Errno::ok: return "ok";
    case Errno::invalid_handle: return "invalid-handle";
    case Errno::network: return "network-failure";
    case Errno::protocol: return "protocol-failure";
    case Errno::identity_mismatch: return "identity-mismatch";
    case Errno::short_buffer: return "short-buffer";
    case Errno::out_of_bounds: return "out-of-bounds";
  }
  return "unknown";
}

const char* to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::exited: return "exited";
    case RunStatus::trapped: return "trapped";
    case RunStatus::missing_entry: return "missing-entry";
  }
  return "unknown";
}

crypto::Digest measure(ByteView module_bytes) { return crypto::sha256(module_bytes); }

namespace {

// proc_exit unwinds the interpreter through this exception.
struct ProcExit {
  std::uint32_t code;
};

using Args = std::span<const std::uint64_t>;
using Results = std::span<std::uint64_t>;

std::uint32_t arg(Args args, std::size_t i) { return static_cast<std::uint32_t>(args[i]); }

HostState& state_of(wasm::Instance& inst) { return *static_cast<HostState*>(inst.host_data); }

// Bounds-checked access to guest memory. Every pointer a guest hands over
// goes through here before the host touches it.
std::optional<std::span<std::uint8_t>> guest_range(wasm::Instance& inst, std::uint32_t ptr, std::uint32_t len) {
  wasm::Memory* mem = inst.memory();
  if (!mem) return std::nullopt;
  return mem->view(ptr, len);
}

void store_u32(std::span<std::uint8_t> at, std::uint32_t v) { std::memcpy(at.data(), &v, 4); }

void store_u64(std::span<std::uint8_t> at, std::uint64_t v) { std::memcpy(at.data(), &v, 8); }

wasm::FuncType i32_func(std::size_t params) {
  return wasm::FuncType{std::vector<wasm::ValType>(params, wasm::ValType::i32), {wasm::ValType::i32}};
}

std::uint32_t fail(HostState& st, const char* fn, Errno e, const std::string& detail = {}) {
  st.last_error = std::string(fn) + ": " + (detail.empty() ? to_string(e) : detail);
  return static_cast<std::uint32_t>(e);
}

// ---------------------------------------------------------------------------
// watz_ra

std::uint32_t net_handshake(wasm::Instance& inst, HostState& st, const HostOptions& opts, Args a) {
  constexpr const char* fn = "net_handshake";
  auto addr = guest_range(inst, arg(a, 0), arg(a, 1));
  auto vkey = guest_range(inst, arg(a, 2), arg(a, 3));
  auto out_ctx = guest_range(inst, arg(a, 4), 4);
  auto out_anchor = guest_range(inst, arg(a, 5), 4);
  if (!addr || !vkey || !out_ctx || !out_anchor) return fail(st, fn, Errno::out_of_bounds);
  if (vkey->size() != crypto::kPointSize) return fail(st, fn, Errno::protocol, "verifier key must be 65 bytes");

  crypto::Point expected;
  std::memcpy(expected.data(), vkey->data(), expected.size());
  crypto::EntropySource& entropy = opts.entropy ? *opts.entropy : crypto::system_entropy();

  try {
    net::Endpoint endpoint = net::Endpoint::parse(std::string(addr->begin(), addr->end()));
    auto [session, msg0] = attester::AttesterSession::start(expected, entropy);
    net::Socket socket = net::connect(endpoint, opts.io_timeout);
    socket.set_timeout(opts.io_timeout);
    net::write_frame(socket, wire::MsgType::msg0, wire::encode_msg0(msg0));
    wire::Frame reply = net::read_frame(socket);
    if (reply.type != wire::MsgType::msg1) return fail(st, fn, Errno::protocol, "expected msg1");
    crypto::Digest anchor = session.handle_msg1(wire::decode_msg1(reply.payload));

    std::uint32_t ctx = st.allocate_handle();
    std::uint32_t anchor_handle = st.allocate_handle();
    st.contexts.emplace(ctx, Context{std::move(session), std::move(socket), std::nullopt, false});
    st.anchors.emplace(anchor_handle, anchor);
    store_u32(*out_ctx, ctx);
    store_u32(*out_anchor, anchor_handle);
    return 0;
  } catch (const attester::AttesterError& e) {
    if (e.code() == attester::AttesterErrc::identity_mismatch) return fail(st, fn, Errno::identity_mismatch);
    return fail(st, fn, Errno::protocol, to_string(e.code()));
  } catch (const net::NetError& e) {
    return fail(st, fn, Errno::network, e.what());
  } catch (const wire::WireError& e) {
    return fail(st, fn, Errno::protocol, e.what());
  }
}

std::uint32_t collect_quote(wasm::Instance& inst, HostState& st, Args a) {
  constexpr const char* fn = "collect_quote";
  auto it = st.anchors.find(arg(a, 0));
  if (it == st.anchors.end()) return fail(st, fn, Errno::invalid_handle);
  auto out = guest_range(inst, arg(a, 1), 4);
  if (!out) return fail(st, fn, Errno::out_of_bounds);
  evidence::Evidence ev = st.service->issue_evidence(it->second, st.measurement);
  std::uint32_t h = st.allocate_handle();
  st.quotes.emplace(h, ev);
  store_u32(*out, h);
  return 0;
}

std::uint32_t dispose_quote(HostState& st, Args a) {
  if (st.quotes.erase(arg(a, 0)) == 0) return fail(st, "dispose_quote", Errno::invalid_handle);
  return 0;
}

std::uint32_t net_send_quote(HostState& st, Args a) {
  constexpr const char* fn = "net_send_quote";
  auto ctx = st.contexts.find(arg(a, 0));
  auto quote = st.quotes.find(arg(a, 1));
  if (ctx == st.contexts.end() || quote == st.quotes.end()) return fail(st, fn, Errno::invalid_handle);
  Context& c = ctx->second;
  if (c.session.phase() != attester::Phase::handshake_done) {
    return fail(st, fn, Errno::protocol, std::string("session is ") + attester::to_string(c.session.phase()));
  }
  try {
    wire::Msg2Payload msg2 = c.session.build_msg2(quote->second);
    net::write_frame(c.socket, wire::MsgType::msg2, wire::encode_msg2(msg2));
    return 0;
  } catch (const attester::AttesterError& e) {
    return fail(st, fn, Errno::protocol, to_string(e.code()));
  } catch (const net::NetError& e) {
    return fail(st, fn, Errno::network, e.what());
  }
}

std::uint32_t net_receive_data(wasm::Instance& inst, HostState& st, Args a) {
  constexpr const char* fn = "net_receive_data";
  auto ctx = st.contexts.find(arg(a, 0));
  if (ctx == st.contexts.end()) return fail(st, fn, Errno::invalid_handle);
  auto buf = guest_range(inst, arg(a, 1), arg(a, 2));
  auto out_written = guest_range(inst, arg(a, 3), 4);
  if (!buf || !out_written) return fail(st, fn, Errno::out_of_bounds);
  Context& c = ctx->second;

  if (!c.pending_blob) {
    if (c.blob_delivered) return fail(st, fn, Errno::protocol, "secret already received");
    if (c.session.phase() != attester::Phase::quote_sent) {
      return fail(st, fn, Errno::protocol, std::string("session is ") + attester::to_string(c.session.phase()));
    }
    try {
      wire::Frame frame = net::read_frame(c.socket);
      if (frame.type != wire::MsgType::msg3) return fail(st, fn, Errno::protocol, "expected msg3");
      c.pending_blob = c.session.handle_msg3(wire::decode_msg3(frame.payload));
    } catch (const attester::AttesterError& e) {
      return fail(st, fn, Errno::protocol, to_string(e.code()));
    } catch (const net::NetError& e) {
      return fail(st, fn, Errno::network, e.what());
    } catch (const wire::WireError& e) {
      return fail(st, fn, Errno::protocol, e.what());
    }
  }

  const Bytes& blob = *c.pending_blob;
  store_u32(*out_written, static_cast<std::uint32_t>(blob.size()));
  if (blob.size() > buf->size()) return fail(st, fn, Errno::short_buffer);
  if (!blob.empty()) std::memcpy(buf->data(), blob.data(), blob.size());
  crypto::secure_wipe(c.pending_blob->data(), c.pending_blob->size());
  c.pending_blob.reset();
  c.blob_delivered = true;
  return 0;
}

std::uint32_t net_dispose(HostState& st, Args a) {
  if (st.contexts.erase(arg(a, 0)) == 0) return fail(st, "net_dispose", Errno::invalid_handle);
  return 0;
}

std::uint32_t test_sink(wasm::Instance& inst, HostState& st, Args a) {
  auto range = guest_range(inst, arg(a, 0), arg(a, 1));
  if (!range) return fail(st, "watz_test_sink", Errno::out_of_bounds);
  st.last_received_blob = Bytes(range->begin(), range->end());
  return 0;
}

// ---------------------------------------------------------------------------
// WASI subset

constexpr std::uint32_t kWasiSuccess = 0;
constexpr std::uint32_t kWasiBadf = 8;
constexpr std::uint32_t kWasiFault = 21;
constexpr std::uint32_t kWasiInval = 28;

std::uint32_t fd_write(wasm::Instance& inst, const HostOptions& opts, Args a) {
  std::uint32_t fd = arg(a, 0), iovs = arg(a, 1), count = arg(a, 2);
  auto nwritten = guest_range(inst, arg(a, 3), 4);
  if (fd != 1 && fd != 2) return kWasiBadf;
  if (!nwritten || count > (1u << 20)) return kWasiFault;
  auto vec = guest_range(inst, iovs, count * 8);
  if (!vec) return kWasiFault;
  std::uint32_t total = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t ptr, len;
    std::memcpy(&ptr, vec->data() + i * 8, 4);
    std::memcpy(&len, vec->data() + i * 8 + 4, 4);
    auto data = guest_range(inst, ptr, len);
    if (!data) return kWasiFault;
    if (opts.console) opts.console->write(reinterpret_cast<const char*>(data->data()), static_cast<std::streamsize>(len));
    total += len;
  }
  if (opts.console) opts.console->flush();
  store_u32(*nwritten, total);
  return kWasiSuccess;
}

std::uint32_t args_sizes_get(wasm::Instance& inst, const HostOptions& opts, Args a) {
  auto argc = guest_range(inst, arg(a, 0), 4);
  auto size = guest_range(inst, arg(a, 1), 4);
  if (!argc || !size) return kWasiFault;
  std::uint32_t bytes = 0;
  for (const auto& s : opts.args) bytes += static_cast<std::uint32_t>(s.size() + 1);
  store_u32(*argc, static_cast<std::uint32_t>(opts.args.size()));
  store_u32(*size, bytes);
  return kWasiSuccess;
}

std::uint32_t args_get(wasm::Instance& inst, const HostOptions& opts, Args a) {
  std::uint32_t argv = arg(a, 0), buf = arg(a, 1);
  std::uint32_t bytes = 0;
  for (const auto& s : opts.args) bytes += static_cast<std::uint32_t>(s.size() + 1);
  auto ptrs = guest_range(inst, argv, static_cast<std::uint32_t>(opts.args.size() * 4));
  auto data = guest_range(inst, buf, bytes);
  if (!ptrs || !data) return kWasiFault;
  std::uint32_t off = 0;
  for (std::size_t i = 0; i < opts.args.size(); ++i) {
    store_u32(ptrs->subspan(i * 4, 4), buf + off);
    std::memcpy(data->data() + off, opts.args[i].c_str(), opts.args[i].size() + 1);
    off += static_cast<std::uint32_t>(opts.args[i].size() + 1);
  }
  return kWasiSuccess;
}

std::uint32_t clock_time_get(wasm::Instance& inst, Args a) {
  std::uint32_t id = arg(a, 0);
  auto out = guest_range(inst, static_cast<std::uint32_t>(a[2]), 8);
  if (!out) return kWasiFault;
  std::chrono::nanoseconds now;
  if (id == 0) now = std::chrono::system_clock::now().time_since_epoch();
  else if (id == 1) now = std::chrono::steady_clock::now().time_since_epoch();
  else return kWasiInval;
  store_u64(*out, static_cast<std::uint64_t>(now.count()));
  return kWasiSuccess;
}

void define_watz_ra(wasm::Linker& linker, const HostOptions& opts) {
  auto def = [&](const char* name, std::size_t params, auto body) {
    linker.define(kImportModule, name, i32_func(params),
                  [body](wasm::Instance& inst, Args args, Results results) {
                    results[0] = body(inst, state_of(inst), args);
                  });
  };
  const HostOptions* o = &opts;
  def("net_handshake", 6, [o](wasm::Instance& i, HostState& s, Args a) { return net_handshake(i, s, *o, a); });
  def("collect_quote", 2, [](wasm::Instance& i, HostState& s, Args a) { return collect_quote(i, s, a); });
  def("dispose_quote", 1, [](wasm::Instance&, HostState& s, Args a) { return dispose_quote(s, a); });
  def("net_send_quote", 2, [](wasm::Instance&, HostState& s, Args a) { return net_send_quote(s, a); });
  def("net_receive_data", 4, [](wasm::Instance& i, HostState& s, Args a) { return net_receive_data(i, s, a); });
  def("net_dispose", 1, [](wasm::Instance&, HostState& s, Args a) { return net_dispose(s, a); });
  def("watz_test_sink", 2, [](wasm::Instance& i, HostState& s, Args a) { return test_sink(i, s, a); });
}

void define_wasi(wasm::Linker& linker, const HostOptions& opts) {
  using wasm::ValType;
  const HostOptions* o = &opts;
  auto ret = [](Results r, std::uint32_t v) { r[0] = v; };

  linker.define(kWasiModule, "fd_write", i32_func(4),
                [o, ret](wasm::Instance& i, Args a, Results r) { ret(r, fd_write(i, *o, a)); });
  linker.define(kWasiModule, "args_sizes_get", i32_func(2),
                [o, ret](wasm::Instance& i, Args a, Results r) { ret(r, args_sizes_get(i, *o, a)); });
  linker.define(kWasiModule, "args_get", i32_func(2),
                [o, ret](wasm::Instance& i, Args a, Results r) { ret(r, args_get(i, *o, a)); });
  linker.define(kWasiModule, "environ_sizes_get", i32_func(2), [ret](wasm::Instance& i, Args a, Results r) {
    auto count = guest_range(i, arg(a, 0), 4);
    auto size = guest_range(i, arg(a, 1), 4);
    if (!count || !size) return ret(r, kWasiFault);
    store_u32(*count, 0);
    store_u32(*size, 0);
    ret(r, kWasiSuccess);
  });
  linker.define(kWasiModule, "environ_get", i32_func(2),
                [ret](wasm::Instance&, Args, Results r) { ret(r, kWasiSuccess); });
  linker.define(kWasiModule, "clock_time_get",
                wasm::FuncType{{ValType::i32, ValType::i64, ValType::i32}, {ValType::i32}},
                [ret](wasm::Instance& i, Args a, Results r) { ret(r, clock_time_get(i, a)); });
  linker.define(kWasiModule, "proc_exit", wasm::FuncType{{ValType::i32}, {}},
                [](wasm::Instance&, Args a, Results) { throw ProcExit{arg(a, 0)}; });

  // Everything else links, then traps if the guest actually calls it.
  linker.define_fallback(kWasiModule, [](const std::string& name, const wasm::FuncType&) {
    return std::optional<wasm::HostFunction>([name](wasm::Instance&, Args, Results) {
      throw wasm::Trap(wasm::TrapKind::host, "unimplemented WASI function " + name);
    });
  });
}

}  // namespace

std::unique_ptr<Guest> Guest::load(ByteView module_bytes, HostOptions options) {
  crypto::Digest claim = measure(module_bytes);
  if (!options.service) throw std::invalid_argument("Guest::load requires an attestation service");

  std::unique_ptr<Guest> g(new Guest());
  g->options_ = std::move(options);
  g->state_.service = g->options_.service;
  g->state_.measurement = claim;

  try {
    auto module = wasm::load_module(module_bytes);
    wasm::Linker linker;
    define_watz_ra(linker, g->options_);
    define_wasi(linker, g->options_);
    g->instance_ = wasm::Instance::instantiate(module, linker, &g->state_);
  } catch (const wasm::LoadError& e) {
    throw LoadError(claim, std::string("malformed module: ") + e.what());
  } catch (const wasm::LinkError& e) {
    throw LoadError(claim, std::string("link error: ") + e.what());
  } catch (const wasm::Trap& e) {
    throw LoadError(claim, std::string("start function trapped: ") + e.what());
  } catch (const ProcExit& e) {
    throw LoadError(claim, "start function exited with code " + std::to_string(e.code));
  }
  return g;
}

Guest::~Guest() = default;

RunOutcome Guest::run() {
  RunOutcome out;
  if (!instance_->has_function(kEntryPoint)) {
    out.status = RunStatus::missing_entry;
    out.detail = std::string("missing export ") + kEntryPoint;
    return out;
  }
  const wasm::FuncType& type =
      instance_->module().function_type(instance_->module().find_export(kEntryPoint, wasm::ExternKind::func)->index);
  if (!type.params.empty()) {
    out.status = RunStatus::missing_entry;
    out.detail = std::string(kEntryPoint) + " must take no parameters, has type " + wasm::to_string(type);
    return out;
  }
  try {
    instance_->invoke(kEntryPoint);
    out.status = RunStatus::completed;
  } catch (const ProcExit& e) {
    out.status = RunStatus::exited;
    out.exit_code = e.code;
    if (e.code != 0) out.detail = "guest exited with code " + std::to_string(e.code);
  } catch (const wasm::Trap& e) {
    out.status = RunStatus::trapped;
    out.detail = std::string("trap: ") + e.what();
  } catch (const std::exception& e) {
    out.status = RunStatus::trapped;
    out.detail = std::string("host error: ") + e.what();
  }
  return out;
}

}  // namespace watz::host
