#include "watz/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <stdexcept>

#include "watz/attestation_service.hpp"
#include "watz/attester.hpp"
#include "watz/net.hpp"
#include "watz/verifier.hpp"

namespace watz::bench {

using profile::Category;
using profile::Message;
using profile::Party;

namespace {

constexpr std::array<Party, 2> kParties = {Party::attester, Party::verifier};
constexpr std::array<Message, 3> kTableMessages = {Message::msg0, Message::msg1, Message::msg2};
constexpr std::array<Category, 4> kCategories = {Category::memory, Category::key_generation, Category::symmetric,
                                                 Category::asymmetric};

double micros(std::chrono::nanoseconds d) { return static_cast<double>(d.count()) / 1000.0; }

struct Fixture {
  std::shared_ptr<attestation::AttestationService> service;
  std::shared_ptr<verifier::VerifierConfig> config;
  crypto::Digest claim;
  net::Listener listener;
};

Fixture make_fixture(std::size_t blob_size) {
  ByteArray<32> seed;
  seed.fill(0x5a);
  auto service = std::make_shared<attestation::AttestationService>(attestation::RootOfTrust::from_bytes(seed));
  auto config = std::make_shared<verifier::VerifierConfig>();
  config->identity = crypto::gen_identity_keypair();
  config->endorsements.insert(service->public_attestation_key());
  const crypto::Digest claim = crypto::sha256(Bytes{'b', 'e', 'n', 'c', 'h'});
  config->reference_values.insert(claim);
  config->secret_blob.resize(blob_size);
  crypto::system_entropy().fill(config->secret_blob);
  config->validate();
  return {service, config, claim, net::Listener::bind({"127.0.0.1", 0})};
}

void verifier_side(Fixture& f, profile::Recorder& rec) {
  auto socket = f.listener.accept(std::chrono::seconds(10));
  if (!socket) throw std::runtime_error("bench: attester never connected");
  socket->set_timeout(std::chrono::seconds(10));
  profile::ScopedRecorder scope(rec);
  verifier::VerifierSession session(f.config);
  const auto msg1 = session.handle_msg0(wire::decode_msg0(net::read_frame(*socket).payload));
  net::write_frame(*socket, wire::MsgType::msg1, wire::encode_msg1(msg1));
  const auto verdict = session.appraise_msg2(wire::decode_msg2(net::read_frame(*socket).payload));
  if (!verdict.accepted) throw std::runtime_error("bench: verifier rejected the quote");
  net::write_frame(*socket, wire::MsgType::msg3, wire::encode_msg3(session.build_msg3()));
}

void attester_side(Fixture& f, profile::Recorder& rec) {
  net::Socket socket = net::connect({"127.0.0.1", f.listener.port()}, std::chrono::seconds(10));
  socket.set_timeout(std::chrono::seconds(10));
  profile::ScopedRecorder scope(rec);
  auto [session, msg0] = attester::AttesterSession::start(f.config->identity.public_point);
  net::write_frame(socket, wire::MsgType::msg0, wire::encode_msg0(msg0));
  const auto anchor = session.handle_msg1(wire::decode_msg1(net::read_frame(socket).payload));
  const auto msg2 = session.build_msg2(f.service->issue_evidence(anchor, f.claim));
  net::write_frame(socket, wire::MsgType::msg2, wire::encode_msg2(msg2));
  const Bytes blob = session.handle_msg3(wire::decode_msg3(net::read_frame(socket).payload));
  if (!equal_ct(blob, f.config->secret_blob)) throw std::runtime_error("bench: secret corrupted in transit");
}

struct RunRecorders {
  profile::Recorder attester;
  profile::Recorder verifier;
};

RunRecorders run_once(Fixture& f) {
  RunRecorders r;
  auto v = std::async(std::launch::async, [&] { verifier_side(f, r.verifier); });
  try {
    attester_side(f, r.attester);
  } catch (...) {
    v.wait();
    throw;
  }
  v.get();
  return r;
}

std::chrono::nanoseconds message_total(const profile::Recorder& rec, Party p, Message m) {
  std::chrono::nanoseconds sum{0};
  for (Category c : kCategories) sum += rec.get(p, m, c);
  return sum;
}

}  // namespace

Stats summarize(std::vector<double> samples) {
  Stats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median_us = n % 2 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2;
  if (n > 1) {
    double mean = 0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double sq = 0;
    for (double x : samples) sq += (x - mean) * (x - mean);
    s.stddev_us = std::sqrt(sq / static_cast<double>(n - 1));
  }
  return s;
}

const Cell& Report::cell(Party p, Message m, Category c) const {
  for (const auto& cell : table) {
    if (cell.party == p && cell.message == m && cell.category == c) return cell;
  }
  throw std::out_of_range("no such bench cell");
}

double Report::median_sum_us(Message m, Category c) const {
  return cell(Party::attester, m, c).stats.median_us + cell(Party::verifier, m, c).stats.median_us;
}

Report run(const Options& options) {
  if (options.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  Report report;
  report.options = options;

  {
    Fixture f = make_fixture(options.table_blob_size);
    run_once(f);  // warm-up: first-use costs of OpenSSL and the allocator
    std::vector<RunRecorders> runs;
    for (int i = 0; i < options.iterations; ++i) runs.push_back(run_once(f));
    for (Party p : kParties) {
      for (Message m : kTableMessages) {
        for (Category c : kCategories) {
          std::vector<double> samples;
          for (const auto& r : runs) samples.push_back(micros((p == Party::attester ? r.attester : r.verifier).get(p, m, c)));
          report.table.push_back({p, m, c, summarize(std::move(samples))});
        }
      }
    }
  }

  for (std::size_t size : options.curve_blob_sizes) {
    Fixture f = make_fixture(size);
    run_once(f);
    std::vector<double> total, att, ver;
    for (int i = 0; i < options.iterations; ++i) {
      const auto r = run_once(f);
      const double a = micros(message_total(r.attester, Party::attester, Message::msg3));
      const double v = micros(message_total(r.verifier, Party::verifier, Message::msg3));
      att.push_back(a);
      ver.push_back(v);
      total.push_back(a + v);
    }
    report.msg3_curve.push_back({size, summarize(total), summarize(att), summarize(ver)});
  }
  return report;
}

namespace {

std::string fmt(const Stats& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", s.median_us, s.stddev_us);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // "±" is two bytes but one column.
  std::size_t cols = s.size();
  if (s.find("±") != std::string::npos) cols -= 1;
  if (cols < width) s.append(width - cols, ' ');
  return s;
}

}  // namespace

std::string format_table(const Report& report) {
  std::ostringstream out;
  out << "Protocol execution time per message, microseconds (median ± stddev over " << report.options.iterations
      << " runs, " << report.options.table_blob_size << "-byte secret)\n\n";
  const std::size_t w0 = 10, w1 = 8, wc = 26;
  out << pad("party", w0) << pad("message", w1);
  for (Category c : kCategories) out << pad(profile::to_string(c), wc);
  out << "total\n";
  for (Party p : kParties) {
    for (Message m : kTableMessages) {
      out << pad(profile::to_string(p), w0) << pad(profile::to_string(m), w1);
      double total = 0;
      for (Category c : kCategories) {
        const auto& s = report.cell(p, m, c).stats;
        total += s.median_us;
        out << pad(fmt(s), wc);
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", total);
      out << buf << "\n";
    }
  }
  out << "\nAsymmetric / symmetric median ratio, both parties:";
  for (Message m : {Message::msg1, Message::msg2}) {
    const double sym = report.median_sum_us(m, Category::symmetric);
    const double asym = report.median_sum_us(m, Category::asymmetric);
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s %.0fx", profile::to_string(m), sym > 0 ? asym / sym : 0.0);
    out << buf;
  }
  out << "\n";

  if (!report.msg3_curve.empty()) {
    out << "\nmsg3 execution time by secret size, microseconds (median ± stddev)\n\n";
    out << pad("size", 12) << pad("attester", 22) << pad("verifier", 22) << "total\n";
    for (const auto& pt : report.msg3_curve) {
      char size[32];
      std::snprintf(size, sizeof size, "%.1f MB", static_cast<double>(pt.blob_size) / 1e6);
      out << pad(size, 12) << pad(fmt(pt.attester), 22) << pad(fmt(pt.verifier), 22) << fmt(pt.total) << "\n";
    }
  }
  return out.str();
}

std::string to_csv(const Report& report) {
  std::ostringstream out;
  out << "section,party,message,category,blob_bytes,median_us,stddev_us\n";
  char buf[64];
  for (const auto& c : report.table) {
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", c.stats.median_us, c.stats.stddev_us);
    out << "table," << profile::to_string(c.party) << "," << profile::to_string(c.message) << ","
        << profile::to_string(c.category) << "," << report.options.table_blob_size << "," << buf << "\n";
  }
  for (const auto& pt : report.msg3_curve) {
    const std::pair<const char*, const Stats*> rows[] = {
        {"attester", &pt.attester}, {"verifier", &pt.verifier}, {"total", &pt.total}};
    for (const auto& [who, s] : rows) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f", s->median_us, s->stddev_us);
      out << "msg3_curve," << who << ",msg3,all," << pt.blob_size << "," << buf << "\n";
    }
  }
  return out.str();
}

}  // namespace watz::bench
