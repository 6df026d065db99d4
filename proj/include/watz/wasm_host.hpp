#pragma once
// Trusted-runtime stand-in: measures a WebAssembly module, links it against
// the WASI-RA host functions (import module "watz_ra") plus a small WASI
// subset, and runs its "_start" export.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "watz/attestation_service.hpp"
#include "watz/attester.hpp"
#include "watz/bytes.hpp"
#include "watz/crypto.hpp"
#include "watz/evidence.hpp"
#include "watz/net.hpp"
#include "watz/wasm/instance.hpp"

namespace watz::host {

inline constexpr const char* kImportModule = "watz_ra";
inline constexpr const char* kWasiModule = "wasi_snapshot_preview1";
inline constexpr const char* kEntryPoint = "_start";

// Error codes returned by every watz_ra function.
enum class Errno : std::uint32_t {
  ok = 0,
  invalid_handle = 1,
  network = 2,
  protocol = 3,
  identity_mismatch = 4,
  short_buffer = 5,
  out_of_bounds = 6,
};

const char* to_string(Errno e) noexcept;

crypto::Digest measure(ByteView module_bytes);

/// Load failure. The measurement is taken before parsing, so it is always
/// available.
class LoadError : public std::runtime_error {
 public:
  LoadError(const crypto::Digest& measurement, const std::string& what)
      : std::runtime_error(what), measurement_(measurement) {}
  const crypto::Digest& measurement() const noexcept { return measurement_; }

 private:
  crypto::Digest measurement_;
};

struct HostOptions {
  std::shared_ptr<const attestation::AttestationService> service;
  /// WASI argv; the first entry is conventionally the program name.
  std::vector<std::string> args{"guest"};
  /// Receives guest writes to fd 1 and 2. Discarded when null.
  std::ostream* console = nullptr;
  std::chrono::milliseconds io_timeout = net::kDefaultTimeout;
  crypto::EntropySource* entropy = nullptr;  // system entropy when null
};

struct Context {
  attester::AttesterSession session;
  net::Socket socket;
  std::optional<Bytes> pending_blob;  // decrypted but not yet copied out
  bool blob_delivered = false;
};

struct HostState {
  std::shared_ptr<const attestation::AttestationService> service;
  std::map<std::uint32_t, Context> contexts;
  std::map<std::uint32_t, crypto::Digest> anchors;
  std::map<std::uint32_t, evidence::Evidence> quotes;
  crypto::Digest measurement{};
  std::optional<Bytes> last_received_blob;

  // Most recent failure inside a host function, for operator diagnostics,
  // e.g. "net_handshake: identity-mismatch".
  std::string last_error;

  std::uint32_t next_handle = 1;
  std::uint32_t allocate_handle() { return next_handle++; }
};

enum class RunStatus { completed, exited, trapped, missing_entry };

struct RunOutcome {
  RunStatus status = RunStatus::completed;
  std::uint32_t exit_code = 0;
  std::string detail;

  bool ok() const noexcept {
    return status == RunStatus::completed || (status == RunStatus::exited && exit_code == 0);
  }
};

const char* to_string(RunStatus s) noexcept;

class Guest {
 public:
  /// Measures `module_bytes`, then decodes, validates and links them.
  /// Throws LoadError. The start function, if any, runs here.
  static std::unique_ptr<Guest> load(ByteView module_bytes, HostOptions options);

  ~Guest();
  Guest(const Guest&) = delete;
  Guest& operator=(const Guest&) = delete;

  const crypto::Digest& measurement() const noexcept { return state_.measurement; }
  HostState& state() noexcept { return state_; }
  const HostState& state() const noexcept { return state_; }
  wasm::Instance& instance() noexcept { return *instance_; }

  /// Invokes "_start". Never throws for guest misbehaviour.
  RunOutcome run();

 private:
  Guest() = default;

  HostOptions options_;
  HostState state_;
  std::unique_ptr<wasm::Instance> instance_;
};

}  // namespace watz::host
