#pragma once

// Runs one protocol body at every party of a local mesh: a dry run first to
// size the precomputation, then the dealer, then one thread per party.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "mpfix/precomp.hpp"
#include "mpfix/session.hpp"
#include "mpfix/sharing.hpp"
#include "mpfix/transport.hpp"

namespace mpfix {

struct RunOptions {
  int parties = 2;
  std::uint64_t seed = 1;
  TransportKind transport = TransportKind::kInProcess;
  std::string host = "127.0.0.1";
  MeshOptions mesh;
  std::string config_digest;
  // Dealer files to consume instead of dealing in memory.
  std::optional<std::filesystem::path> precomp_dir;
};

struct PartyOutcome {
  CommMetrics metrics;
  std::vector<ConsumptionRecord> consumed;
};

struct RunSummary {
  Manifest demand;
  std::vector<PartyOutcome> parties;
};

using PartyBody = std::function<void(Session&)>;

// Executes body once against a dry-run network and returns the demand.
Manifest count_demand(int parties, std::uint64_t seed, const PartyBody& body);

// Dry run, dealing and the real run. The first party exception is rethrown
// after every thread has finished.
RunSummary run_local(const RunOptions& options, const PartyBody& body);

// Dealer seed derived from a run seed.
std::uint64_t dealer_seed(std::uint64_t seed);

// Convenience wrapper collecting one result per party.
template <class F>
auto run_parties(const RunOptions& options, F&& body, RunSummary* summary = nullptr) {
  using R = std::invoke_result_t<F&, Session&>;
  std::vector<R> results(options.parties);
  auto outcome = run_local(options, [&](Session& s) {
    R r = body(s);
    if (!s.dry_run()) results[s.party()] = std::move(r);
  });
  if (summary) *summary = std::move(outcome);
  return results;
}

}  // namespace mpfix
