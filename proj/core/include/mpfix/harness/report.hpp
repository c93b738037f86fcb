#pragma once

// Per-party run reports, written as one JSON object per line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mpfix/metrics.hpp"

namespace mpfix {

struct AccuracyStat {
  std::string name;
  std::uint64_t count = 0;
  double max_abs = 0, mean_abs = 0;
  double max_rel = 0, mean_rel = 0;

  void add(double got, double want);
  void add_all(std::span<const double> got, std::span<const double> want);

  bool operator==(const AccuracyStat&) const = default;
};

struct RunReport {
  std::string scenario;
  int party = 0;
  int parties = 0;
  std::string config_digest;
  std::string output_digest;  // hash of every opened word, in order
  std::vector<AccuracyStat> accuracy;
  std::map<std::string, double> values;
  std::map<std::string, OpStats> ledger;
  std::uint64_t rounds = 0;
  std::uint64_t payload_bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  double wall_seconds = 0;

  const AccuracyStat& stat(const std::string& name) const;
  double value(const std::string& name) const;

  // JSON text; the timing field is dropped when with_timing is false.
  std::string to_json(bool with_timing = true) const;
  static RunReport from_json(const std::string& line);
};

void append_reports(const std::filesystem::path& path, const std::vector<RunReport>& reports);
std::vector<RunReport> read_reports(const std::filesystem::path& path);

// Human-readable tables: accuracy, scenario values and op ledger.
std::string summarize(const std::vector<RunReport>& reports);

}  // namespace mpfix
