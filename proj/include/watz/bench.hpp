#pragma once

// Loopback protocol micro-benchmark. Each iteration is one complete protocol
// run over TCP on 127.0.0.1, attester and verifier on separate threads, with
// per-thread profiling recorders.

#include <cstddef>
#include <string>
#include <vector>

#include "watz/profile.hpp"

namespace watz::bench {

struct Stats {
  double median_us = 0;
  double stddev_us = 0;
};

Stats summarize(std::vector<double> samples_us);

struct Options {
  int iterations = 20;
  /// Secret size for the per-message table runs.
  std::size_t table_blob_size = 1024;
  /// Secret sizes for the msg3 curve.
  std::vector<std::size_t> curve_blob_sizes = {500'000, 1'000'000, 2'000'000, 3'000'000};
};

struct Cell {
  profile::Party party;
  profile::Message message;
  profile::Category category;
  Stats stats;
};

struct CurvePoint {
  std::size_t blob_size;
  Stats total;  // attester + verifier, all categories
  Stats attester;
  Stats verifier;
};

struct Report {
  Options options;
  /// 2 parties x msg0..msg2 x 4 categories, party-major.
  std::vector<Cell> table;
  std::vector<CurvePoint> msg3_curve;

  const Cell& cell(profile::Party p, profile::Message m, profile::Category c) const;
  /// Sum of medians over both parties for one message and category.
  double median_sum_us(profile::Message m, profile::Category c) const;
};

/// Throws std::runtime_error if a run does not deliver the secret intact.
Report run(const Options& options);

std::string format_table(const Report& report);
std::string to_csv(const Report& report);

}  // namespace watz::bench
