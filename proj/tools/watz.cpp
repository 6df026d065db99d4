// watz: operator command line for the attestation stack.
//
//   watz verifier serve --config verifier.json
//   watz attester run --module guest.wasm --verifier HOST:PORT --verifier-key HEX --seed-file seed.hex
//   watz measure guest.wasm
//   watz keygen --seed-file seed.hex
//   watz identity-gen --out identity.key
//   watz quote --seed-file seed.hex --anchor HEX --claim HEX
//   watz bench --iterations 20
//
// Failures print a single "watz: error: ..." line on stderr and exit 1.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <sys/stat.h>

#include "watz/attestation_service.hpp"
#include "watz/bench.hpp"
#include "watz/server.hpp"
#include "watz/verifier.hpp"
#include "watz/wasm_host.hpp"

using namespace watz;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

volatile std::sig_atomic_t g_stop_signal = 0;

extern "C" void on_stop_signal(int sig) { g_stop_signal = sig; }

Bytes read_input(const std::string& path, const char* what) {
  try {
    return read_file(path);
  } catch (const std::exception&) {
    throw Failure(std::string("cannot read ") + what + " " + path);
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::shared_ptr<attestation::AttestationService> load_service(const std::string& seed_file) {
  try {
    return std::make_shared<attestation::AttestationService>(attestation::RootOfTrust::from_file(seed_file));
  } catch (const attestation::ConfigError& e) {
    throw Failure(e.what());
  }
}

// --- verifier serve ----------------------------------------------------------

int cmd_verifier_serve(const std::string& config_path, const std::string& listen_override) {
  std::shared_ptr<verifier::VerifierConfig> config;
  try {
    config = std::make_shared<verifier::VerifierConfig>(verifier::load_config(config_path));
  } catch (const verifier::ConfigError& e) {
    throw Failure(std::string("config: ") + e.what());
  }
  if (!listen_override.empty()) config->listen_address = listen_override;

  net::Listener listener = [&] {
    try {
      return net::Listener::bind(net::Endpoint::parse(config->listen_address));
    } catch (const net::NetError& e) {
      throw Failure(std::string("listen: ") + e.what());
    }
  }();

  std::signal(SIGINT, on_stop_signal);
  std::signal(SIGTERM, on_stop_signal);

  verifier::Server server(config, std::move(listener), verifier::stream_log_sink(std::cout));
  std::jthread serving([&](std::stop_token stop) { server.serve(stop); });
  while (g_stop_signal == 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  serving.request_stop();
  serving.join();
  return 0;
}

// --- attester run --------------------------------------------------------------

int cmd_attester_run(const std::string& module_path, const std::string& verifier_addr, const std::string& vkey_hex,
                     const std::string& seed_file, const std::string& out_path, bool quiet) {
  crypto::Point vkey;
  try {
    vkey = array_from_hex<crypto::kPointSize>(vkey_hex);
  } catch (const std::invalid_argument& e) {
    throw Failure(std::string("--verifier-key: ") + e.what());
  }
  if (!crypto::is_valid_point(vkey)) throw Failure("--verifier-key is not a P-256 point");

  const Bytes module = read_input(module_path, "module");
  host::HostOptions options;
  options.service = load_service(seed_file);
  options.args = {std::filesystem::path(module_path).filename().string(), verifier_addr, to_hex(vkey)};
  options.console = quiet ? nullptr : &std::cerr;

  std::unique_ptr<host::Guest> guest;
  try {
    guest = host::Guest::load(module, options);
  } catch (const host::LoadError& e) {
    throw Failure("load: " + one_line(e.what()) + " (measurement " + to_hex(e.measurement()) + ")");
  }
  if (!quiet) std::cerr << "measurement " << to_hex(guest->measurement()) << "\n";

  const host::RunOutcome outcome = guest->run();
  const auto& state = guest->state();
  if (!outcome.ok()) {
    std::string msg = "attestation failed: " + outcome.detail;
    if (outcome.status == host::RunStatus::exited && outcome.exit_code >= 1 && outcome.exit_code <= 6) {
      msg += " (" + std::string(host::to_string(static_cast<host::Errno>(outcome.exit_code))) + ")";
    }
    if (!state.last_error.empty()) msg += "; " + state.last_error;
    throw Failure(one_line(msg));
  }
  if (!state.last_received_blob) throw Failure("guest finished without handing over a secret");

  if (out_path.empty()) {
    std::cout << to_hex(*state.last_received_blob) << "\n";
  } else {
    try {
      write_file(out_path, *state.last_received_blob);
    } catch (const std::exception&) {
      throw Failure("cannot write " + out_path);
    }
  }
  return 0;
}

// --- key material --------------------------------------------------------------

int cmd_identity_gen(const std::string& out_path) {
  const auto identity = crypto::gen_identity_keypair();
  const std::string line = to_hex(identity.private_scalar.expose()) + "\n";
  {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Failure("cannot write " + out_path);
    out << line;
  }
  ::chmod(out_path.c_str(), 0600);
  std::cout << to_hex(identity.public_point) << "\n";
  return 0;
}

int cmd_quote(const std::string& seed_file, const std::string& anchor_hex, const std::string& claim_hex) {
  const auto service = load_service(seed_file);
  crypto::Digest anchor, claim;
  try {
    anchor = array_from_hex<32>(anchor_hex);
    claim = array_from_hex<32>(claim_hex);
  } catch (const std::invalid_argument& e) {
    throw Failure(std::string("anchor/claim: ") + e.what());
  }
  std::cout << evidence::to_hex(service->issue_evidence(anchor, claim)) << "\n";
  return 0;
}

// --- bench -------------------------------------------------------------------------

int cmd_bench(int iterations, std::size_t blob_size, const std::string& csv_path) {
  bench::Options options;
  options.iterations = iterations;
  options.table_blob_size = blob_size;
  const auto report = bench::run(options);
  std::cout << bench::format_table(report);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw Failure("cannot write " + csv_path);
    out << bench::to_csv(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WebAssembly remote attestation: verifier, attester and tooling"};
  app.require_subcommand(1);

  auto* verifier_cmd = app.add_subcommand("verifier", "Verifier operations")->require_subcommand(1);
  auto* serve = verifier_cmd->add_subcommand("serve", "Serve attestation requests until SIGINT/SIGTERM");
  std::string config_path, listen;
  serve->add_option("--config", config_path, "JSON config file")->required();
  serve->add_option("--listen", listen, "Override listen_address (host:port, port 0 picks one)");

  auto* attester_cmd = app.add_subcommand("attester", "Attester operations")->require_subcommand(1);
  auto* run = attester_cmd->add_subcommand("run", "Load, measure and run a guest that attests itself");
  std::string module_path, verifier_addr, vkey_hex, seed_file, out_path;
  bool quiet = false;
  run->add_option("--module", module_path, "Guest .wasm file")->required();
  run->add_option("--verifier", verifier_addr, "Verifier host:port")->required();
  run->add_option("--verifier-key", vkey_hex, "Verifier identity public key (130 hex chars)")->required();
  run->add_option("--seed-file", seed_file, "Root-of-trust seed (64 hex chars)")->required();
  run->add_option("--out", out_path, "Write the secret here instead of printing hex");
  run->add_flag("--quiet", quiet, "Suppress guest console output and the measurement line");

  auto* measure = app.add_subcommand("measure", "Print the SHA-256 claim of a module");
  std::string measure_path;
  measure->add_option("module", measure_path, "Module file")->required();

  auto* keygen = app.add_subcommand("keygen", "Print the attestation public key derived from a seed");
  std::string keygen_seed;
  keygen->add_option("--seed-file", keygen_seed, "Root-of-trust seed (64 hex chars)")->required();

  auto* identity = app.add_subcommand("identity-gen", "Create a verifier identity key");
  std::string identity_out;
  identity->add_option("--out", identity_out, "Private key file to write")->required();

  auto* quote = app.add_subcommand("quote", "Issue evidence for an anchor and claim");
  std::string quote_seed, anchor_hex, claim_hex;
  quote->add_option("--seed-file", quote_seed, "Root-of-trust seed (64 hex chars)")->required();
  quote->add_option("--anchor", anchor_hex, "32-byte anchor, hex")->required();
  quote->add_option("--claim", claim_hex, "32-byte claim, hex")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Loopback protocol micro-benchmark");
  int iterations = 20;
  std::size_t blob_size = 1024;
  std::string csv_path;
  bench_cmd->add_option("--iterations", iterations, "Runs per measurement")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--blob-size", blob_size, "Secret size in bytes for the per-message table")
      ->check(CLI::Range(std::size_t{0}, verifier::kMaxSecretBlob));
  bench_cmd->add_option("--csv", csv_path, "Also write the results as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "watz: error: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (serve->parsed()) return cmd_verifier_serve(config_path, listen);
    if (run->parsed()) return cmd_attester_run(module_path, verifier_addr, vkey_hex, seed_file, out_path, quiet);
    if (measure->parsed()) {
      std::cout << to_hex(host::measure(read_input(measure_path, "module"))) << "\n";
      return 0;
    }
    if (keygen->parsed()) {
      std::cout << to_hex(load_service(keygen_seed)->public_attestation_key()) << "\n";
      return 0;
    }
    if (identity->parsed()) return cmd_identity_gen(identity_out);
    if (quote->parsed()) return cmd_quote(quote_seed, anchor_hex, claim_hex);
    if (bench_cmd->parsed()) return cmd_bench(iterations, blob_size, csv_path);
  } catch (const std::exception& e) {
    std::cerr << "watz: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 1;
}
