#pragma once

// Scenario configuration: a flat `key = value` text file. Lines starting with
// '#' are comments. Unknown keys are kept as scenario parameters.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpfix/transport.hpp"

namespace mpfix {

struct ScenarioConfig {
  std::string scenario;
  int parties = 2;
  int ring_bits = 64;
  int precision = 0;  // 0 picks the scenario default
  std::uint64_t seed = 1;
  TransportKind transport = TransportKind::kInProcess;
  // Deployment keys; left out of the digest.
  std::string host = "127.0.0.1";
  std::uint16_t base_port = 0;
  std::vector<PartyAddress> peers;  // explicit per-party addresses, overrides host/base_port
  std::optional<std::filesystem::path> precomp_dir;
  std::map<std::string, std::string> params;

  std::string param(const std::string& key, const std::string& fallback) const;
  long long param_int(const std::string& key, long long fallback) const;
  double param_double(const std::string& key, double fallback) const;

  // Sorted `key=value` lines of every key that changes the computation.
  std::string canonical() const;
  // Hex SHA-256 of canonical().
  std::string digest() const;
  // Full text form, parseable by parse_config.
  std::string to_text() const;
  // Addresses for a TCP mesh of this config (peers, or host:base_port+i).
  std::vector<PartyAddress> addresses() const;

  void validate() const;
};

ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

// Applies `key=value` overrides on top of a config.
void apply_override(ScenarioConfig& cfg, std::string_view assignment);

std::string sha256_hex(std::string_view data);

}  // namespace mpfix
