#pragma once

// Shared fixtures for the unit suites and the acceptance runner: a scratch
// directory, an in-process verifier, a frame-level TCP proxy and a scripted
// attester that can misbehave on purpose.

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "watz/attestation_service.hpp"
#include "watz/attester.hpp"
#include "watz/net.hpp"
#include "watz/server.hpp"
#include "watz/verifier.hpp"
#include "watz/wire.hpp"

namespace watz::testkit {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

ByteArray<32> seed_from_byte(std::uint8_t fill);
std::shared_ptr<attestation::AttestationService> make_service(std::uint8_t seed_fill,
                                                              std::uint32_t version = evidence::kCurrentVersion);
Bytes bytes_of(std::string_view text);

/// Directory holding the assembled guest modules.
std::filesystem::path guest_dir();
Bytes guest_bytes(const std::string& name);

/// Identity, one endorsed device (seed 0x11) and one reference claim.
struct World {
  crypto::IdentityKeyPair identity = crypto::gen_identity_keypair();
  std::shared_ptr<attestation::AttestationService> service = make_service(0x11);
  crypto::Digest claim = crypto::sha256(bytes_of("reference guest"));
  Bytes secret = bytes_of("the provisioned secret blob");

  std::shared_ptr<verifier::VerifierConfig> config() const;
};

/// Verifier serving on an ephemeral loopback port until destroyed.
class ServerHarness {
 public:
  explicit ServerHarness(std::shared_ptr<const verifier::VerifierConfig> config);
  ~ServerHarness();

  std::string address() const;
  net::Endpoint endpoint() const { return {"127.0.0.1", port_}; }
  std::uint16_t port() const noexcept { return port_; }

  std::vector<std::string> log_lines() const;
  /// Blocks until `n` connections finished or `timeout` elapsed.
  bool wait_for_connections(std::uint64_t n, std::chrono::milliseconds timeout = std::chrono::seconds(10)) const;
  /// Appraisal log lines only, as "accepted" or the rejection reason.
  std::vector<std::string> verdicts() const;

 private:
  std::unique_ptr<verifier::Server> server_;
  std::uint16_t port_ = 0;
  mutable std::mutex mutex_;
  std::vector<std::string> lines_;
  std::jthread thread_;
};

enum class Direction { to_verifier, to_attester };

struct CapturedFrame {
  Direction direction;
  wire::MsgType type;
  std::size_t payload_size;
};

/// Relays frames between attesters and a verifier, one connection at a time,
/// recording every frame the verifier emits. `mutate` may rewrite a frame in
/// flight.
class FrameProxy {
 public:
  using Mutator = std::function<void(Direction, wire::Frame&)>;

  FrameProxy(net::Endpoint upstream, Mutator mutate = {});
  ~FrameProxy();

  std::string address() const;
  std::vector<CapturedFrame> captured() const;
  std::size_t count(Direction d, wire::MsgType type) const;
  std::size_t connections() const noexcept { return connections_.load(); }

 private:
  void relay(net::Socket client);

  net::Endpoint upstream_;
  Mutator mutate_;
  net::Listener listener_;
  mutable std::mutex mutex_;
  std::vector<CapturedFrame> frames_;
  std::atomic<std::size_t> connections_{0};
  std::jthread thread_;
};

/// Outcome of a scripted attester run over TCP.
struct DriverResult {
  std::optional<attester::AttesterErrc> attester_error;
  std::optional<Bytes> secret;
  bool connection_closed_without_msg3 = false;
  std::optional<evidence::Evidence> evidence_sent;
};

struct DriverScript {
  std::function<void(evidence::Evidence&)> tamper_evidence;
  /// Sent in place of a freshly issued evidence, wrapped in this session's MAC.
  std::optional<evidence::Evidence> replay_evidence;
  /// Sent verbatim in place of this session's msg2.
  std::optional<Bytes> replay_msg2;
};

/// Runs the attester side of one protocol run against `endpoint`, using
/// `service` for evidence over `claim`.
DriverResult drive_attester(const net::Endpoint& endpoint, const crypto::Point& verifier_key,
                            const attestation::AttestationService& service, const crypto::Digest& claim,
                            const DriverScript& script = {}, Bytes* msg2_out = nullptr);

/// msg2 built by hand with a given Km, bypassing the attester's own checks.
wire::Msg2Payload seal_msg2(const crypto::Secret<crypto::kKeySize>& km, const crypto::Point& g_a,
                            const evidence::Evidence& ev);

/// A verifier impostor holding the real identity key. It answers one msg0
/// with a msg1 whose signature covers `signed_g_a` instead of the attester's
/// G_a, with a correct MAC. Counts any msg3 it would have to send (none).
class RogueVerifier {
 public:
  RogueVerifier(const crypto::IdentityKeyPair& identity, const crypto::Point& signed_g_a);
  ~RogueVerifier();

  std::string address() const;
  net::Endpoint endpoint() const { return {"127.0.0.1", listener_.port()}; }
  bool saw_msg2() const noexcept { return saw_msg2_.load(); }

 private:
  crypto::IdentityKeyPair identity_;
  crypto::Point signed_g_a_;
  net::Listener listener_;
  std::atomic<bool> saw_msg2_{false};
  std::jthread thread_;
};

}  // namespace watz::testkit
