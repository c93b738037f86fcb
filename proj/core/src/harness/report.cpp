#include "mpfix/harness/report.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "json.hpp"
#include "mpfix/errors.hpp"

namespace mpfix {

using nlohmann::ordered_json;

void AccuracyStat::add(double got, double want) {
  const double abs = std::fabs(got - want);
  const double rel = want == 0 ? abs : abs / std::fabs(want);
  ++count;
  max_abs = std::max(max_abs, abs);
  max_rel = std::max(max_rel, rel);
  mean_abs += (abs - mean_abs) / static_cast<double>(count);
  mean_rel += (rel - mean_rel) / static_cast<double>(count);
}

void AccuracyStat::add_all(std::span<const double> got, std::span<const double> want) {
  if (got.size() != want.size()) throw ShapeMismatch("accuracy: length mismatch for " + name);
  for (std::size_t i = 0; i < got.size(); ++i) add(got[i], want[i]);
}

const AccuracyStat& RunReport::stat(const std::string& name) const {
  for (const auto& a : accuracy) {
    if (a.name == name) return a;
  }
  throw ConfigError("report has no accuracy entry " + name);
}

double RunReport::value(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("report has no value " + name);
  return it->second;
}

namespace {

// JSON has no NaN or infinity; those are written as strings.
ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double read_number(const ordered_json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::nan("");
  return s == "inf" ? INFINITY : -INFINITY;
}

}  // namespace

std::string RunReport::to_json(bool with_timing) const {
  ordered_json j;
  j["scenario"] = scenario;
  j["party"] = party;
  j["parties"] = parties;
  j["config_digest"] = config_digest;
  j["output_digest"] = output_digest;
  j["accuracy"] = ordered_json::array();
  for (const auto& a : accuracy) {
    j["accuracy"].push_back({{"name", a.name},
                             {"count", a.count},
                             {"max_abs", number(a.max_abs)},
                             {"mean_abs", number(a.mean_abs)},
                             {"max_rel", number(a.max_rel)},
                             {"mean_rel", number(a.mean_rel)}});
  }
  j["values"] = ordered_json::object();
  for (const auto& [k, v] : values) j["values"][k] = number(v);
  j["ledger"] = ordered_json::object();
  for (const auto& [k, s] : ledger) {
    j["ledger"][k] = {{"calls", s.calls},   {"mul", s.mul},       {"mul_elements", s.mul_elements},
                      {"matmul", s.matmul}, {"scale", s.scale},   {"trunc", s.trunc},
                      {"rounds", s.rounds}, {"bytes", s.bytes}};
  }
  j["rounds"] = rounds;
  j["payload_bytes_sent"] = payload_bytes_sent;
  j["bytes_received"] = bytes_received;
  if (with_timing) j["wall_seconds"] = wall_seconds;
  return j.dump();
}

RunReport RunReport::from_json(const std::string& line) {
  RunReport r;
  try {
    const auto j = ordered_json::parse(line);
    r.scenario = j.at("scenario").get<std::string>();
    r.party = j.at("party").get<int>();
    r.parties = j.at("parties").get<int>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.output_digest = j.at("output_digest").get<std::string>();
    for (const auto& a : j.at("accuracy")) {
      r.accuracy.push_back({a.at("name").get<std::string>(), a.at("count").get<std::uint64_t>(),
                            read_number(a.at("max_abs")), read_number(a.at("mean_abs")),
                            read_number(a.at("max_rel")), read_number(a.at("mean_rel"))});
    }
    for (const auto& [k, v] : j.at("values").items()) r.values[k] = read_number(v);
    for (const auto& [k, s] : j.at("ledger").items()) {
      OpStats o;
      o.calls = s.at("calls");
      o.mul = s.at("mul");
      o.mul_elements = s.at("mul_elements");
      o.matmul = s.at("matmul");
      o.scale = s.at("scale");
      o.trunc = s.at("trunc");
      o.rounds = s.at("rounds");
      o.bytes = s.at("bytes");
      r.ledger[k] = o;
    }
    r.rounds = j.at("rounds");
    r.payload_bytes_sent = j.at("payload_bytes_sent");
    r.bytes_received = j.at("bytes_received");
    if (j.contains("wall_seconds")) r.wall_seconds = j["wall_seconds"];
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed report line: ") + e.what());
  }
  return r;
}

void append_reports(const std::filesystem::path& path, const std::vector<RunReport>& reports) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : reports) out << r.to_json() << "\n";
}

std::vector<RunReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<RunReport> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(RunReport::from_json(line));
  }
  return out;
}

std::string summarize(const std::vector<RunReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += fmt::format("== {} (party {} of {}, {:.2f}s, {} rounds, {} bytes sent)\n", r.scenario, r.party, r.parties,
                       r.wall_seconds, r.rounds, r.payload_bytes_sent);
    if (!r.accuracy.empty()) {
      out += fmt::format("  {:<28} {:>8} {:>12} {:>12} {:>12} {:>12}\n", "accuracy", "count", "max_abs", "mean_abs",
                         "max_rel", "mean_rel");
      for (const auto& a : r.accuracy) {
        out += fmt::format("  {:<28} {:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}\n", a.name, a.count, a.max_abs,
                           a.mean_abs, a.max_rel, a.mean_rel);
      }
    }
    for (const auto& [k, v] : r.values) out += fmt::format("  {:<40} {:.6g}\n", k, v);
    if (!r.ledger.empty()) {
      out += fmt::format("  {:<22} {:>6} {:>6} {:>10} {:>6} {:>6} {:>6} {:>7} {:>12}\n", "op", "calls", "mul",
                         "mul_elems", "matmul", "scale", "trunc", "rounds", "bytes");
      for (const auto& [k, s] : r.ledger) {
        out += fmt::format("  {:<22} {:>6} {:>6} {:>10} {:>6} {:>6} {:>6} {:>7} {:>12}\n", k, s.calls, s.mul,
                           s.mul_elements, s.matmul, s.scale, s.trunc, s.rounds, s.bytes);
      }
    }
  }
  return out;
}

}  // namespace mpfix
