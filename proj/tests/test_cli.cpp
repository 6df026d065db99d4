#include <gtest/gtest.h>

#include <csignal>
#include <json.hpp>
#include <regex>
#include <sys/stat.h>

#include "support/process.hpp"
#include "support/testkit.hpp"

using namespace watz;
using testkit::cli_path;
using testkit::run_process;

namespace {

constexpr const char* kZeroSeedPublic =
    "0441e1d20af4c9f5cc572eaf17a6d40f5b35cb1dc239bc2b373eb550aadb9f4eda"
    "89279055410b69cbe437e9d3ce2254a79f10adbcb9ac3470fb56ea8bbae8058a";

std::string text_of(const Bytes& b) { return std::string(b.begin(), b.end()); }

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  write_file(p.string(), ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Every failure is exactly one line on stderr with a fixed prefix.
void expect_one_line_error(const testkit::ProcessResult& r, const std::string& needle) {
  EXPECT_NE(r.exit_code, 0);
  EXPECT_EQ(r.err.rfind("watz: error: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  EXPECT_NE(r.err.find(needle), std::string::npos) << r.err;
}

class CliTest : public ::testing::Test {
 protected:
  testkit::ProcessResult watz(std::vector<std::string> args) {
    args.insert(args.begin(), cli_path());
    return run_process(args);
  }

  testkit::TempDir dir;
};

// A verifier process configured for `reference` with the zero-seed device.
struct VerifierProcess {
  std::unique_ptr<testkit::BackgroundProcess> proc;
  std::string address;
  std::string public_key;
};

VerifierProcess start_verifier(const testkit::TempDir& dir, const std::string& reference_hex, const Bytes& secret) {
  VerifierProcess v;
  const auto identity = run_process({cli_path(), "identity-gen", "--out", (dir / "identity.key").string()});
  v.public_key = trim(identity.out);
  write_text(dir / "seed.hex", std::string(64, '0') + "\n");
  write_file((dir / "secret.bin").string(), secret);
  const nlohmann::json config = {
      {"identity_private_key", trim(text_of(read_file((dir / "identity.key").string())))},
      {"endorsements", {kZeroSeedPublic}},
      {"reference_values", {reference_hex}},
      {"min_version", 1},
      {"secret_blob_file", "secret.bin"},
      {"listen_address", "127.0.0.1:0"}};
  write_text(dir / "verifier.json", config.dump(2));
  v.proc = std::make_unique<testkit::BackgroundProcess>(
      std::vector<std::string>{cli_path(), "verifier", "serve", "--config", (dir / "verifier.json").string()});
  const auto line = v.proc->read_line(std::chrono::seconds(10));
  if (!line) throw std::runtime_error("verifier did not report its address");
  v.address = nlohmann::json::parse(*line).at("address");
  return v;
}

}  // namespace

TEST_F(CliTest, MeasureMatchesSha256) {
  write_file((dir / "empty.wasm").string(), {});
  const auto r = watz({"measure", (dir / "empty.wasm").string()});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855\n");

  const auto guest = (testkit::guest_dir() / "attest.wasm").string();
  const auto a = watz({"measure", guest});
  const auto b = watz({"measure", guest});
  EXPECT_EQ(a.out, b.out);
  EXPECT_TRUE(std::regex_match(trim(a.out), std::regex("[0-9a-f]{64}")));
  EXPECT_EQ(trim(a.out), to_hex(crypto::sha256(read_file(guest))));

  expect_one_line_error(watz({"measure", (dir / "missing.wasm").string()}), "cannot read module");
}

TEST_F(CliTest, KeygenIsPinnedForTheZeroSeed) {
  write_text(dir / "seed.hex", std::string(64, '0') + "\n");
  const auto r = watz({"keygen", "--seed-file", (dir / "seed.hex").string()});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(trim(r.out), kZeroSeedPublic);
  EXPECT_TRUE(crypto::is_valid_point(array_from_hex<65>(trim(r.out))));

  write_text(dir / "short.hex", "abcd\n");
  expect_one_line_error(watz({"keygen", "--seed-file", (dir / "short.hex").string()}), "64 hex");
}

TEST_F(CliTest, IdentityGenIsFreshAndPrivate) {
  const auto a = watz({"identity-gen", "--out", (dir / "a.key").string()});
  const auto b = watz({"identity-gen", "--out", (dir / "b.key").string()});
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_NE(a.out, b.out);
  EXPECT_TRUE(crypto::is_valid_point(array_from_hex<65>(trim(a.out))));
  const auto scalar = array_from_hex<32>(trim(text_of(read_file((dir / "a.key").string()))));
  EXPECT_EQ(to_hex(crypto::public_from_scalar(crypto::Scalar(scalar))), trim(a.out));
  struct stat st {};
  ASSERT_EQ(stat((dir / "a.key").c_str(), &st), 0);
  EXPECT_EQ(st.st_mode & 0777, 0600u);
}

TEST_F(CliTest, QuoteIsReproducible) {
  write_text(dir / "seed.hex", std::string(64, '0'));
  const std::vector<std::string> args = {"quote", "--seed-file", (dir / "seed.hex").string(), "--anchor",
                                         "97ab6cd8fef09594d5edfaf11d10b6f7a55e025bbbad924f88ba32edc0c36a79",
                                         "--claim", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"};
  const auto a = watz(args);
  const auto b = watz(args);
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_TRUE(evidence::verify_signature(evidence::from_hex(trim(a.out))));
  // Same vector as the evidence oracle.
  EXPECT_EQ(trim(a.out).substr(394 - 128),
            "ec04a173f94d215c59c4302659d4e6a665f48843151e26d0f594d6dee7bc05dc"
            "3c4578692431b01b90581a2109258441ae74ba0c87f439724df56077d3b140e1");
}

TEST_F(CliTest, ServeRejectsBadConfig) {
  write_text(dir / "verifier.json", R"({"identity_private_key": "01", "endorsements": [], "reference_values": []})");
  expect_one_line_error(watz({"verifier", "serve", "--config", (dir / "verifier.json").string()}), "config:");

  const nlohmann::json config = {{"identity_private_key", std::string(63, '0') + "1"},
                                 {"endorsements", {kZeroSeedPublic}},
                                 {"reference_values", {std::string(64, 'a')}},
                                 {"secret_blob_file", "missing-secret.bin"}};
  write_text(dir / "verifier.json", config.dump());
  expect_one_line_error(watz({"verifier", "serve", "--config", (dir / "verifier.json").string()}),
                        "secret_blob_file");
}

TEST_F(CliTest, UsageErrors) {
  expect_one_line_error(watz({}), "subcommand");
  expect_one_line_error(watz({"bench", "--iterations", "0"}), "iterations");
  expect_one_line_error(watz({"attester", "run", "--module", "x"}), "required");
}

TEST_F(CliTest, AttesterAgainstServe) {
  const auto guest = (testkit::guest_dir() / "attest.wasm").string();
  const auto claim = to_hex(crypto::sha256(read_file(guest)));
  const Bytes secret = testkit::bytes_of("cli secret \x01\x02\x03");
  auto v = start_verifier(dir, claim, secret);
  const auto seed = (dir / "seed.hex").string();

  const auto start = std::chrono::steady_clock::now();
  const auto ok = watz({"attester", "run", "--module", guest, "--verifier", v.address, "--verifier-key", v.public_key,
                        "--seed-file", seed, "--out", (dir / "got.bin").string()});
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
  ASSERT_EQ(ok.exit_code, 0) << ok.err;
  EXPECT_EQ(read_file((dir / "got.bin").string()), secret);
  EXPECT_NE(ok.err.find("measurement " + claim), std::string::npos);

  const auto hex = watz({"attester", "run", "--module", guest, "--verifier", v.address, "--verifier-key", v.public_key,
                         "--seed-file", seed, "--quiet"});
  EXPECT_EQ(hex.out, to_hex(secret) + "\n");
  EXPECT_TRUE(hex.err.empty()) << hex.err;

  const auto wrong_key = watz({"attester", "run", "--module", guest, "--verifier", v.address, "--verifier-key",
                               kZeroSeedPublic, "--seed-file", seed, "--quiet"});
  expect_one_line_error(wrong_key, "identity-mismatch");

  // Flip a letter inside a data segment so the module still loads.
  Bytes tampered = read_file(guest);
  const std::string marker = "attestation complete";
  const auto at = text_of(tampered).find(marker);
  ASSERT_NE(at, std::string::npos);
  tampered[at] ^= 0x20;
  write_file((dir / "tampered.wasm").string(), tampered);
  const auto bad = watz({"attester", "run", "--module", (dir / "tampered.wasm").string(), "--verifier", v.address,
                         "--verifier-key", v.public_key, "--seed-file", seed, "--quiet"});
  EXPECT_NE(bad.exit_code, 0);

  v.proc->send_signal(SIGINT);
  EXPECT_EQ(v.proc->wait(std::chrono::seconds(10)), 0);
  const auto& log = v.proc->transcript();
  EXPECT_NE(log.find("\"reason\":\"unknown-claim\""), std::string::npos) << log;
  EXPECT_NE(log.find("\"event\":\"stopped\""), std::string::npos) << log;
}

TEST_F(CliTest, AttesterLoadFailureReportsMeasurement) {
  write_file((dir / "junk.wasm").string(), testkit::bytes_of("not wasm"));
  write_text(dir / "seed.hex", std::string(64, '0'));
  const auto r = watz({"attester", "run", "--module", (dir / "junk.wasm").string(), "--verifier", "127.0.0.1:1",
                       "--verifier-key", kZeroSeedPublic, "--seed-file", (dir / "seed.hex").string()});
  expect_one_line_error(r, "measurement " + to_hex(crypto::sha256(testkit::bytes_of("not wasm"))));
}

TEST_F(CliTest, BenchSingleIteration) {
  const auto r = watz({"bench", "--iterations", "1", "--csv", (dir / "bench.csv").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* label : {"Memory management", "Key generation", "Symmetric cryptography", "Asymmetric cryptography",
                            "attester", "verifier", "msg0", "msg1", "msg2", "0.5 MB", "3.0 MB"}) {
    EXPECT_NE(r.out.find(label), std::string::npos) << label;
  }
  const auto csv = text_of(read_file((dir / "bench.csv").string()));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 24 + 4 * 3);
}
