// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Criteria that need the command line tool run it as a
// separate process.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "support/process.hpp"
#include "support/testkit.hpp"
#include "watz/wasm_host.hpp"

using namespace watz;
using testkit::Direction;

namespace {

constexpr const char* kZeroSeedPublic =
    "0441e1d20af4c9f5cc572eaf17a6d40f5b35cb1dc239bc2b373eb550aadb9f4eda"
    "89279055410b69cbe437e9d3ce2254a79f10adbcb9ac3470fb56ea8bbae8058a";
constexpr const char* kAnchorG2G = "97ab6cd8fef09594d5edfaf11d10b6f7a55e025bbbad924f88ba32edc0c36a79";
constexpr const char* kEmptyDigest = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
constexpr const char* kZeroSeedEvidence =
    "97ab6cd8fef09594d5edfaf11d10b6f7a55e025bbbad924f88ba32edc0c36a79"
    "00000001"
    "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    "0441e1d20af4c9f5cc572eaf17a6d40f5b35cb1dc239bc2b373eb550aadb9f4eda"
    "89279055410b69cbe437e9d3ce2254a79f10adbcb9ac3470fb56ea8bbae8058a"
    "ec04a173f94d215c59c4302659d4e6a665f48843151e26d0f594d6dee7bc05dc"
    "3c4578692431b01b90581a2109258441ae74ba0c87f439724df56077d3b140e1";

// A failed check throws; the message becomes the FAIL detail.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw CheckFailed(what);
}

template <typename A, typename B>
void check_eq(const A& got, const B& want, const std::string& what) {
  if (!(got == want)) {
    std::ostringstream msg;
    msg << what << ": got " << got << ", want " << want;
    throw CheckFailed(msg.str());
  }
}

Bytes text_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string text_of(const Bytes& b) { return std::string(b.begin(), b.end()); }

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}


testkit::ProcessResult watz(std::vector<std::string> args) {
  args.insert(args.begin(), testkit::cli_path());
  auto r = testkit::run_process(args);
  if (r.exit_code != 0) throw CheckFailed("watz " + args[1] + " exited " + std::to_string(r.exit_code) + ": " + trim(r.err));
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f s", s);
  return buf;
}

// --- 1 -----------------------------------------------------------------------

std::string crypto_vectors() {
  const auto t0 = std::chrono::steady_clock::now();

  check_eq(to_hex(crypto::sha256({})), kEmptyDigest, "sha256('')");
  check_eq(to_hex(crypto::sha256(text_bytes("abc"))),
           "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad", "sha256('abc')");

  const auto k = array_from_hex<16>("2b7e151628aed2a6abf7158809cf4f3c");
  check_eq(to_hex(crypto::cmac(k, {})), "bb1d6929e95937287fa37d129b756746", "cmac example 1");
  check_eq(to_hex(crypto::cmac(k, from_hex("6bc1bee22e409f96e93d7e117393172a"))), "070a16b46b4d4144f79bdd9dd04a287c",
           "cmac example 2");

  const crypto::Scalar i(array_from_hex<32>("c88f01f510d9ac3f70a292daa2316de544e9aab8afe84049c62a9c57862d1433"));
  const crypto::Scalar r(array_from_hex<32>("c6ef9c5d78ae012a011164acb397ce2088685d8f06bf9be0b283ab46476bee53"));
  const std::string gr =
      "04d12dfb5289c8d4f81208b70270398c342296970a0bccb74c736fc7554494bf63"
      "56fbf3ca366cc23e8157854c13c58d6aac23f046ada30f8353e74f33039872ab";
  check_eq(to_hex(crypto::public_from_scalar(r)), gr, "ecdh gr");
  const auto shared = crypto::ecdh_shared_secret(i, array_from_hex<65>(gr));
  check_eq(to_hex(shared.x_coordinate.expose()), "d6840f6b42f6edafd13116e0e12565202fef8e9ece7dce03812464d04b9442de",
           "ecdh girx");
  const auto shared_r = crypto::ecdh_shared_secret(r, crypto::public_from_scalar(i));
  check(shared_r.x_coordinate == shared.x_coordinate, "ecdh is not symmetric");

  const crypto::Scalar x(array_from_hex<32>("c9afa9d845ba75166b5c215767b1d6934e50c3db36e89b127b8a622b120f6721"));
  check_eq(to_hex(crypto::ecdsa_sign_raw(x, text_bytes("sample"))),
           "efd48b2aacb6a8fd1140dd9cd45e81d69d2c877b56aaf991c34d0ea84eaf3716"
           "f7cb1c942d657c41d436c7a1b6e29f65f3e900dbb9aff4064dc4ab2f843acda8",
           "rfc6979 sample");

  check_eq(to_hex(crypto::aead_encrypt(crypto::AesKey{}, crypto::Iv{}, {})), "58e2fccefa7e3061367f1d57a4e7455a",
           "gcm empty plaintext");

  const double elapsed = seconds_since(t0);
  check(elapsed < 1.0, "took " + fmt_seconds(elapsed));
  return "9 vectors bit-exact in " + fmt_seconds(elapsed);
}

// --- 2 -----------------------------------------------------------------------

struct CliVerifier {
  std::unique_ptr<testkit::BackgroundProcess> proc;
  std::string address;
  std::string public_key;
};

// Writes a seed, identity, secret and config into `dir` and starts
// `watz verifier serve` on an ephemeral port.
CliVerifier start_cli_verifier(const testkit::TempDir& dir, const std::string& claim_hex, const Bytes& secret) {
  CliVerifier v;
  v.public_key = trim(watz({"identity-gen", "--out", (dir / "identity.key").string()}).out);
  write_file((dir / "seed.hex").string(), text_bytes(std::string(64, '0') + "\n"));
  write_file((dir / "secret.bin").string(), secret);
  const nlohmann::json config = {{"identity_private_key", trim(text_of(read_file((dir / "identity.key").string())))},
                                 {"endorsements", {kZeroSeedPublic}},
                                 {"reference_values", {claim_hex}},
                                 {"secret_blob_file", "secret.bin"},
                                 {"listen_address", "127.0.0.1:0"}};
  write_file((dir / "verifier.json").string(), text_bytes(config.dump(2)));
  v.proc = std::make_unique<testkit::BackgroundProcess>(std::vector<std::string>{
      testkit::cli_path(), "verifier", "serve", "--config", (dir / "verifier.json").string()});
  const auto line = v.proc->read_line(std::chrono::seconds(10));
  check(line.has_value(), "verifier printed no listening line");
  v.address = nlohmann::json::parse(*line).at("address");
  return v;
}

std::string honest_end_to_end() {
  testkit::TempDir dir;
  const auto guest = (testkit::guest_dir() / "attest.wasm").string();
  Bytes secret(64 * 1024);
  crypto::system_entropy().fill(secret);

  const auto t0 = std::chrono::steady_clock::now();
  auto v = start_cli_verifier(dir, to_hex(crypto::sha256(read_file(guest))), secret);
  watz({"attester", "run", "--module", guest, "--verifier", v.address, "--verifier-key", v.public_key, "--seed-file",
        (dir / "seed.hex").string(), "--out", (dir / "received.bin").string(), "--quiet"});
  const double elapsed = seconds_since(t0);

  v.proc->send_signal(SIGINT);
  check_eq(v.proc->wait(std::chrono::seconds(10)), 0, "verifier exit status");
  check(read_file((dir / "received.bin").string()) == secret, "received blob differs from the configured file");
  check(v.proc->transcript().find("\"outcome\":\"accepted\"") != std::string::npos, "verifier logged no acceptance");
  check(elapsed < 5.0, "took " + fmt_seconds(elapsed));
  return "64 KiB secret byte-identical over " + v.address + " in " + fmt_seconds(elapsed);
}

// --- 3 and 4 -----------------------------------------------------------------

struct GuestRun {
  host::RunOutcome outcome;
  std::string last_error;
};

GuestRun run_guest(const Bytes& module, std::shared_ptr<attestation::AttestationService> service,
                   const std::string& address, const crypto::Point& vkey) {
  host::HostOptions options;
  options.service = std::move(service);
  options.args = {"attest.wasm", address, to_hex(vkey)};
  options.console = nullptr;
  options.io_timeout = std::chrono::seconds(5);
  auto guest = host::Guest::load(module, options);
  GuestRun run{guest->run(), guest->state().last_error};
  return run;
}

struct TamperResult {
  std::string observed;       // reason code seen by the side that rejects
  std::size_t msg3_frames = 0;  // msg3 frames that reached the attester
};

std::string single_verdict(const testkit::ServerHarness& server) {
  check(server.wait_for_connections(1), "verifier never finished the connection");
  const auto v = server.verdicts();
  check_eq(v.size(), std::size_t{1}, "appraisal count");
  return v.front();
}

std::string attester_reason(const GuestRun& run, const std::string& fn) {
  const std::string prefix = fn + ": ";
  check(run.last_error.rfind(prefix, 0) == 0, "unexpected guest error '" + run.last_error + "'");
  return run.last_error.substr(prefix.size());
}

class TamperMatrix {
 public:
  TamperMatrix() : attest_(testkit::guest_bytes("attest")) { claim_ = host::measure(attest_); }

  std::vector<std::pair<std::string, std::function<TamperResult()>>> cases() {
    return {
        {"unknown-claim", [this] { return flipped_guest_byte(); }},
        {"unendorsed-device", [this] { return unendorsed_seed(); }},
        {"bad-evidence-signature", [this] { return corrupted_evidence_signature(); }},
        {"anchor-mismatch", [this] { return replayed_msg2(); }},
        {"signature-invalid", [this] { return msg1_over_wrong_g_a(); }},
        {"identity-mismatch", [this] { return substituted_identity(); }},
        {"stale-version", [this] { return stale_version(); }},
        {"decryption-error", [this] { return flipped_msg3_byte(); }},
    };
  }

 private:
  std::shared_ptr<verifier::VerifierConfig> config() const {
    auto c = world_.config();
    c->reference_values = {claim_};
    return c;
  }

  TamperResult flipped_guest_byte() {
    Bytes tampered = attest_;
    const auto at = text_of(tampered).find("attestation complete");
    check(at != std::string::npos, "marker string not found in guest");
    tampered[at] ^= 0x20;
    testkit::ServerHarness server(config());
    testkit::FrameProxy proxy(server.endpoint());
    run_guest(tampered, world_.service, proxy.address(), world_.identity.public_point);
    return {single_verdict(server), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  TamperResult unendorsed_seed() {
    testkit::ServerHarness server(config());
    testkit::FrameProxy proxy(server.endpoint());
    run_guest(attest_, testkit::make_service(0x99), proxy.address(), world_.identity.public_point);
    return {single_verdict(server), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  TamperResult corrupted_evidence_signature() {
    testkit::ServerHarness server(config());
    testkit::FrameProxy proxy(server.endpoint());
    testkit::DriverScript script;
    script.tamper_evidence = [](evidence::Evidence& ev) { ev.signature[40] ^= 0x01; };
    testkit::drive_attester(net::Endpoint::parse(proxy.address()), world_.identity.public_point, *world_.service, claim_, script);
    return {single_verdict(server), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  // Evidence recorded from an accepted session, replayed in the msg2 of a
  // fresh session on a new verifier.
  TamperResult replayed_msg2() {
    std::optional<evidence::Evidence> recorded;
    {
      testkit::ServerHarness first(config());
      const auto r = testkit::drive_attester(first.endpoint(), world_.identity.public_point, *world_.service, claim_);
      check(r.secret.has_value(), "recording session was not provisioned");
      recorded = r.evidence_sent;
    }
    testkit::ServerHarness server(config());
    testkit::FrameProxy proxy(server.endpoint());
    testkit::DriverScript script;
    script.replay_evidence = recorded;
    testkit::drive_attester(net::Endpoint::parse(proxy.address()), world_.identity.public_point, *world_.service, claim_, script);
    return {single_verdict(server), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  TamperResult msg1_over_wrong_g_a() {
    const auto decoy = crypto::gen_session_keypair().public_point;
    testkit::RogueVerifier rogue(world_.identity, decoy);
    testkit::FrameProxy proxy(rogue.endpoint());
    const auto run = run_guest(attest_, world_.service, proxy.address(), world_.identity.public_point);
    check(!rogue.saw_msg2(), "attester sent msg2 to the impostor");
    return {attester_reason(run, "net_handshake"), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  TamperResult substituted_identity() {
    testkit::ServerHarness server(config());
    testkit::FrameProxy proxy(server.endpoint());
    const auto expected = crypto::gen_identity_keypair().public_point;
    const auto run = run_guest(attest_, world_.service, proxy.address(), expected);
    check_eq(run.outcome.exit_code, 4u, "guest exit code");
    return {attester_reason(run, "net_handshake"), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  TamperResult stale_version() {
    auto c = config();
    c->min_version = evidence::kCurrentVersion + 1;
    testkit::ServerHarness server(c);
    testkit::FrameProxy proxy(server.endpoint());
    run_guest(attest_, world_.service, proxy.address(), world_.identity.public_point);
    return {single_verdict(server), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  TamperResult flipped_msg3_byte() {
    testkit::ServerHarness server(config());
    testkit::FrameProxy proxy(server.endpoint(), [](Direction d, wire::Frame& f) {
      if (d == Direction::to_attester && f.type == wire::MsgType::msg3) f.payload[crypto::kIvSize + 3] ^= 0x01;
    });
    const auto run = run_guest(attest_, world_.service, proxy.address(), world_.identity.public_point);
    check_eq(single_verdict(server), std::string("accepted"), "verdict before the flip");
    return {attester_reason(run, "net_receive_data"), proxy.count(Direction::to_attester, wire::MsgType::msg3)};
  }

  testkit::World world_;
  Bytes attest_;
  crypto::Digest claim_{};
};

struct TamperOutcomes {
  std::vector<std::tuple<std::string, std::string, std::size_t>> rows;  // expected, observed, msg3 frames
  std::string error;
};

TamperOutcomes run_tamper_matrix() {
  TamperOutcomes out;
  TamperMatrix matrix;
  for (auto& [expected, fn] : matrix.cases()) {
    try {
      const auto r = fn();
      out.rows.emplace_back(expected, r.observed, r.msg3_frames);
    } catch (const std::exception& e) {
      out.rows.emplace_back(expected, std::string("error: ") + e.what(), 0);
    }
  }
  return out;
}

std::string tamper_matrix(const TamperOutcomes& t) {
  std::string mismatches;
  for (const auto& [expected, observed, frames] : t.rows) {
    if (observed != expected) mismatches += " " + expected + "->" + observed;
  }
  check(t.rows.size() == 8, "expected 8 cases");
  check(mismatches.empty(), "mismatched:" + mismatches);
  return "8/8 cases produced their exact reason code";
}

std::string no_leak(const TamperOutcomes& t) {
  std::size_t leaked = 0, rejections = 0;
  for (const auto& [expected, observed, frames] : t.rows) {
    if (expected == "decryption-error") continue;  // appraisal accepted; the flip happens in transit
    check(observed == expected, "case " + expected + " did not reject as expected");
    ++rejections;
    leaked += frames;
  }
  check_eq(leaked, std::size_t{0}, "msg3 frames captured");
  return "0 msg3 frames captured across " + std::to_string(rejections) + " rejections";
}

// --- 5 -----------------------------------------------------------------------

std::string freshness() {
  testkit::World world;
  testkit::ServerHarness server(world.config());
  std::set<std::string> g_a, g_v, km, ke;
  for (int i = 0; i < 100; ++i) {
    net::Socket socket = net::connect(server.endpoint(), std::chrono::seconds(5));
    socket.set_timeout(std::chrono::seconds(5));
    auto [session, msg0] = attester::AttesterSession::start(world.identity.public_point);
    net::write_frame(socket, wire::MsgType::msg0, wire::encode_msg0(msg0));
    const auto msg1 = wire::decode_msg1(net::read_frame(socket).payload);
    const auto anchor = session.handle_msg1(msg1);
    net::write_frame(socket, wire::MsgType::msg2,
                     wire::encode_msg2(session.build_msg2(world.service->issue_evidence(anchor, world.claim))));
    const auto secret = session.handle_msg3(wire::decode_msg3(net::read_frame(socket).payload));
    check(secret == world.secret, "handshake " + std::to_string(i) + " was not provisioned");
    g_a.insert(to_hex(session.g_a()));
    g_v.insert(to_hex(msg1.g_v));
    km.insert(to_hex(session.session_keys()->km.expose()));
    ke.insert(to_hex(session.session_keys()->ke.expose()));
  }
  const std::size_t distinct = std::min({g_a.size(), g_v.size(), km.size(), ke.size()});
  check_eq(distinct, std::size_t{100}, "distinct values per component");
  return "100 handshakes, 100 distinct G_a, G_v, Km and Ke";
}

// --- 6 -----------------------------------------------------------------------

std::string determinism() {
  testkit::TempDir dir;
  write_file((dir / "seed.hex").string(), text_bytes(std::string(64, '0') + "\n"));
  std::set<std::string> keys, quotes;
  for (int i = 0; i < 3; ++i) {
    keys.insert(trim(watz({"keygen", "--seed-file", (dir / "seed.hex").string()}).out));
    quotes.insert(trim(watz({"quote", "--seed-file", (dir / "seed.hex").string(), "--anchor", kAnchorG2G, "--claim",
                             kEmptyDigest})
                           .out));
  }
  check_eq(keys.size(), std::size_t{1}, "distinct keygen outputs");
  check_eq(quotes.size(), std::size_t{1}, "distinct quote outputs");
  check_eq(*keys.begin(), std::string(kZeroSeedPublic), "zero-seed public key");
  check_eq(*quotes.begin(), std::string(kZeroSeedEvidence), "zero-seed evidence");
  return "3 runs identical, zero-seed key and evidence match the oracle";
}

// --- 7 -----------------------------------------------------------------------

std::string measurement() {
  testkit::TempDir dir;
  write_file((dir / "empty.wasm").string(), {});
  const std::vector<std::string> modules = {(dir / "empty.wasm").string(),
                                            (testkit::guest_dir() / "attest.wasm").string(),
                                            (testkit::guest_dir() / "hello.wasm").string(),
                                            (testkit::guest_dir() / "noop.wasm").string(),
                                            (testkit::guest_dir() / "abi_handles.wasm").string()};
  for (const auto& m : modules) {
    const auto ours = trim(watz({"measure", m}).out);
    const auto ref = testkit::run_process({"sha256sum", m});
    check_eq(ref.exit_code, 0, "sha256sum exit status");
    check_eq(ours, ref.out.substr(0, 64), "digest of " + std::filesystem::path(m).filename().string());
  }
  return "5 modules match sha256sum, including the empty file";
}

// --- 8 -----------------------------------------------------------------------

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

std::string bench_structure() {
  testkit::TempDir dir;
  const auto csv_path = (dir / "bench.csv").string();
  const auto r = watz({"bench", "--iterations", "20", "--csv", csv_path});
  check(r.out.find("Asymmetric cryptography") != std::string::npos, "table missing from stdout");

  std::stringstream csv(text_of(read_file(csv_path)));
  std::string line;
  std::getline(csv, line);
  check_eq(line, std::string("section,party,message,category,blob_bytes,median_us,stddev_us"), "csv header");

  std::set<std::tuple<std::string, std::string, std::string>> cells;
  std::map<std::pair<std::string, std::string>, double> by_message_category;
  std::vector<std::pair<std::size_t, double>> curve;
  while (std::getline(csv, line)) {
    const auto f = split(line, ',');
    check_eq(f.size(), std::size_t{7}, "csv field count");
    if (f[0] == "table") {
      cells.insert({f[1], f[2], f[3]});
      by_message_category[{f[2], f[3]}] += std::stod(f[5]);
    } else if (f[0] == "msg3_curve" && f[1] == "total") {
      curve.emplace_back(std::stoul(f[4]), std::stod(f[5]));
    }
  }
  check_eq(cells.size(), std::size_t{24}, "table cells");
  for (const char* party : {"attester", "verifier"}) {
    for (const char* msg : {"msg0", "msg1", "msg2"}) {
      for (const char* cat : {"Memory management", "Key generation", "Symmetric cryptography",
                              "Asymmetric cryptography"}) {
        check(cells.count({party, msg, cat}) == 1, std::string("missing cell ") + party + "/" + msg + "/" + cat);
      }
    }
  }

  const std::vector<std::size_t> sizes = {500000, 1000000, 2000000, 3000000};
  check_eq(curve.size(), sizes.size(), "curve points");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    check_eq(curve[i].first, sizes[i], "curve blob size");
    if (i > 0) check(curve[i].second > curve[i - 1].second, "msg3 time does not grow with blob size");
  }

  std::ostringstream summary;
  summary << "24 cells, 4 curve points;";
  for (const char* msg : {"msg1", "msg2"}) {
    const double asym = by_message_category[{msg, "Asymmetric cryptography"}];
    const double sym = by_message_category[{msg, "Symmetric cryptography"}];
    check(sym > 0.0, std::string(msg) + " has no symmetric time");
    const double ratio = asym / sym;
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s asym/sym %.0fx", msg, ratio);
    summary << buf;
    check(ratio > 10.0, std::string(msg) + " asymmetric/symmetric ratio " + std::to_string(ratio) + " <= 10");
  }
  return summary.str();
}

// --- 9 -----------------------------------------------------------------------

std::vector<std::uint32_t> report_words(const Bytes& blob, std::size_t count) {
  check(blob.size() >= count * 4, "report too short");
  std::vector<std::uint32_t> out(count);
  std::memcpy(out.data(), blob.data(), count * 4);
  return out;
}

std::string join(const std::vector<std::uint32_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return "{" + s + "}";
}

Bytes run_fixture(const testkit::World& world, const std::string& name) {
  const Bytes module = testkit::guest_bytes(name);
  auto c = world.config();
  c->reference_values = {host::measure(module)};
  testkit::ServerHarness server(c);
  host::HostOptions options;
  options.service = world.service;
  options.args = {name + ".wasm", server.address(), to_hex(world.identity.public_point)};
  options.console = nullptr;
  auto guest = host::Guest::load(module, options);
  const auto outcome = guest->run();
  check(outcome.ok(), name + ": " + outcome.detail + " " + guest->state().last_error);
  check(guest->state().last_received_blob.has_value(), name + ": no report");
  return *guest->state().last_received_blob;
}

std::string abi_fixtures() {
  testkit::World world;
  const auto len = static_cast<std::uint32_t>(world.secret.size());

  const Bytes sb = run_fixture(world, "abi_short_buffer");
  const std::vector<std::uint32_t> sb_want = {0, 0, 0, 5, len, 5, len, 0, len, 3};
  check_eq(join(report_words(sb, sb_want.size())), join(sb_want), "short-buffer report");
  check(Bytes(sb.begin() + 40, sb.end()) == world.secret, "short-buffer: retried receive lost the secret");

  const auto h = report_words(run_fixture(world, "abi_handles"), 19);
  const std::vector<std::uint32_t> h_status = {h[0], h[3], h[5], h[6], h[7], h[8], h[9], h[11],
                                               h[12], h[13], h[14], h[15], h[16], h[17], h[18]};
  const std::vector<std::uint32_t> h_want = {0, 0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 1, 1, 0, 0};
  check_eq(join(h_status), join(h_want), "handle-hygiene statuses");
  check(h[4] != h[10], "quote handle reused");

  const auto b = report_words(run_fixture(world, "abi_bounds"), 14);
  const std::vector<std::uint32_t> b_want = {6, 6, 0, 6, 6, 6, 0, 6, 0, 0, 6, 6, 0, 1};
  check_eq(join(b), join(b_want), "bounds report");
  return "short-buffer, handle-hygiene and out-of-bounds fixtures match";
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::string& title, const std::function<std::string()>& body) {
    std::string detail;
    bool ok = false;
    try {
      detail = body();
      ok = true;
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << title << " (" << detail << ")" << std::endl;
  };

  report(1, "crypto vectors", crypto_vectors);
  report(2, "honest end-to-end over loopback", honest_end_to_end);
  TamperOutcomes tamper;
  try {
    tamper = run_tamper_matrix();
  } catch (const std::exception& e) {
    tamper.error = e.what();
  }
  report(3, "tamper matrix", [&] {
    check(tamper.error.empty(), tamper.error);
    return tamper_matrix(tamper);
  });
  report(4, "no msg3 on rejection", [&] {
    check(tamper.error.empty(), tamper.error);
    return no_leak(tamper);
  });
  report(5, "handshake freshness", freshness);
  report(6, "key and evidence determinism", determinism);
  report(7, "measurement equals sha256sum", measurement);
  report(8, "bench structure", bench_structure);
  report(9, "WASI-RA ABI fixtures", abi_fixtures);
  return failures == 0 ? 0 : 1;
}
