#include "mpfix/harness/runner.hpp"

#include <exception>
#include <memory>
#include <thread>

namespace mpfix {

std::uint64_t dealer_seed(std::uint64_t seed) { return seed * 0x9e3779b97f4a7c15ULL + 0xd1b54a32d192ed03ULL; }

Manifest count_demand(int parties, std::uint64_t seed, const PartyBody& body) {
  DryRunNetwork net(kConstantParty, parties);
  DemandCounter counter;
  Session s(net, counter, seed);
  body(s);
  return counter.demand();
}

RunSummary run_local(const RunOptions& options, const PartyBody& body) {
  const int n = options.parties;
  RunSummary summary;
  summary.demand = count_demand(n, options.seed, body);

  std::vector<PoolStore> stores;
  if (options.precomp_dir) {
    for (int p = 0; p < n; ++p) stores.push_back(PoolStore::load(*options.precomp_dir, p));
  } else {
    stores = Dealer(n, dealer_seed(options.seed)).generate(summary.demand);
  }

  std::vector<std::unique_ptr<Network>> nets(n);
  std::vector<PartyAddress> addresses;
  if (options.transport == TransportKind::kInProcess) {
    nets = make_in_process_mesh(n, options.mesh);
  } else {
    for (auto port : pick_free_ports(n)) addresses.push_back({options.host, port});
  }

  summary.parties.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (int p = 0; p < n; ++p) {
    threads.emplace_back([&, p] {
      try {
        if (!nets[p]) nets[p] = connect_tcp_mesh(p, addresses, options.mesh);
        nets[p]->handshake(options.config_digest);
        Session s(*nets[p], stores[p], options.seed);
        body(s);
        summary.parties[p].metrics = nets[p]->metrics();
        summary.parties[p].consumed = stores[p].log();
        if (options.precomp_dir) stores[p].persist_cursors();
      } catch (...) {
        errors[p] = std::current_exception();
      }
      nets[p].reset();
    });
  }
  for (auto& t : threads) t.join();

  std::exception_ptr first;
  for (auto& e : errors) {
    if (!e) continue;
    if (!first) first = e;
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);
  return summary;
}

}  // namespace mpfix
