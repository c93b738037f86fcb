#include "mpfix/harness/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mpfix/errors.hpp"

namespace mpfix {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class N>
N parse_number(const std::string& key, const std::string& v) {
  N out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return out;
}

PartyAddress parse_address(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw ConfigError("peer address needs host:port: " + s);
  return {s.substr(0, colon), parse_number<std::uint16_t>("peers", s.substr(colon + 1))};
}

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "scenario") {
    cfg.scenario = value;
  } else if (key == "parties") {
    cfg.parties = parse_number<int>(key, value);
  } else if (key == "ring_bits") {
    cfg.ring_bits = parse_number<int>(key, value);
  } else if (key == "precision") {
    cfg.precision = parse_number<int>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "transport") {
    cfg.transport = parse_transport_kind(value);
  } else if (key == "host") {
    cfg.host = value;
  } else if (key == "base_port") {
    cfg.base_port = parse_number<std::uint16_t>(key, value);
  } else if (key == "peers") {
    cfg.peers.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) cfg.peers.push_back(parse_address(item));
    }
  } else if (key == "precomp_dir") {
    if (value.empty()) {
      cfg.precomp_dir.reset();
    } else {
      cfg.precomp_dir = value;
    }
  } else {
    cfg.params[key] = value;
  }
}

}  // namespace

std::string ScenarioConfig::param(const std::string& key, const std::string& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

long long ScenarioConfig::param_int(const std::string& key, long long fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : parse_number<long long>(key, it->second);
}

double ScenarioConfig::param_double(const std::string& key, double fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": '" + it->second + "'");
  }
}

std::string ScenarioConfig::canonical() const {
  std::map<std::string, std::string> keys = params;
  keys["scenario"] = scenario;
  keys["parties"] = std::to_string(parties);
  keys["ring_bits"] = std::to_string(ring_bits);
  keys["precision"] = std::to_string(precision);
  keys["seed"] = std::to_string(seed);
  std::string out;
  for (const auto& [k, v] : keys) out += k + "=" + v + "\n";
  return out;
}

std::string ScenarioConfig::digest() const { return sha256_hex(canonical()); }

std::string ScenarioConfig::to_text() const {
  std::string out = canonical();
  out += fmt::format("transport={}\nhost={}\nbase_port={}\n", to_string(transport), host, base_port);
  if (!peers.empty()) {
    std::string list;
    for (const auto& p : peers) list += (list.empty() ? "" : ",") + fmt::format("{}:{}", p.host, p.port);
    out += "peers=" + list + "\n";
  }
  if (precomp_dir) out += "precomp_dir=" + precomp_dir->string() + "\n";
  return out;
}

std::vector<PartyAddress> ScenarioConfig::addresses() const {
  if (!peers.empty()) {
    if (static_cast<int>(peers.size()) != parties) throw ConfigError("peers must list one address per party");
    return peers;
  }
  if (base_port == 0) throw ConfigError("tcp run needs base_port or peers");
  std::vector<PartyAddress> out;
  for (int p = 0; p < parties; ++p) out.push_back({host, static_cast<std::uint16_t>(base_port + p)});
  return out;
}

void ScenarioConfig::validate() const {
  if (scenario.empty()) throw ConfigError("config: scenario is required");
  if (parties < 2) throw ConfigError("config: at least two parties are required");
  if (ring_bits != 32 && ring_bits != 64) throw ConfigError("config: ring_bits must be 32 or 64");
  if (precision < 1 || precision >= ring_bits / 2) throw ConfigError("config: precision must be in [1, ring_bits/2)");
}

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    set_key(cfg, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ScenarioConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be key=value: " + std::string(assignment));
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

}  // namespace mpfix
